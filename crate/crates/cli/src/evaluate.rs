//! `filter`, `evaluate` and `compare`.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::Args;
use serde::Deserialize;

use crisis_al_core::evaluation::{compare as compare_methods, evaluate as evaluate_labels};
use crisis_al_core::filter::classify_pool;
use crisis_al_core::model::{import_predictions, write_predictions};
use crisis_al_core::{EditDistanceBudget, EvaluationReport, KeywordList, Label, MatchMode, Pool, Prediction};

use crate::io::{load_keywords, load_plain_corpus, require_file, sibling, write_json, write_output};

#[derive(Debug, Args)]
pub struct FilterArgs {
    /// Corpus to classify (JSON-lines or CSV).
    #[arg(long)]
    pub corpus: PathBuf,
    /// Keyword file: one keyword per line, `#` starts a comment.
    #[arg(long)]
    pub keywords: Option<PathBuf>,
    /// Builtin keyword list: crisislex, germany-flood, chile-forest-fires, chile-prefilter.
    #[arg(long, conflicts_with = "keywords")]
    pub builtin_keywords: Option<String>,
    /// Match keyword-length token windows within --max-distance edits instead of substrings.
    #[arg(long)]
    pub fuzzy: bool,
    /// Edit budget for --fuzzy.
    #[arg(long, default_value_t = 2)]
    pub max_distance: usize,
    /// Predictions output, one {"id", "p_related"} line per document (p_related is 0 or 1).
    #[arg(long)]
    pub output: PathBuf,
    /// Evaluation report written when the corpus has gold labels [default: <output stem>.report.json].
    #[arg(long)]
    pub report: Option<PathBuf>,
}

fn keyword_predictions(pool: &Pool, keywords: &KeywordList, fuzzy: bool, max_distance: usize) -> Result<BTreeMap<String, Label>> {
    let mode = if fuzzy { MatchMode::Fuzzy } else { MatchMode::Exact };
    Ok(classify_pool(pool, keywords, mode, EditDistanceBudget(max_distance))?)
}

fn as_predictions(pool: &Pool, labels: &BTreeMap<String, Label>) -> Vec<Prediction> {
    pool.documents()
        .iter()
        .map(|d| Prediction {
            id: d.id.clone(),
            p_related: f64::from(labels[&d.id].code()),
        })
        .collect()
}

pub fn print_report(report: &EvaluationReport) {
    println!(
        "accuracy {:.4} | unrelated P {:.4} R {:.4} F1 {:.4} | related P {:.4} R {:.4} F1 {:.4}",
        report.accuracy,
        report.unrelated.precision,
        report.unrelated.recall,
        report.unrelated.f1,
        report.related.precision,
        report.related.recall,
        report.related.f1,
    );
    if report.is_degenerate() {
        println!("degenerate metrics (zero denominator): {}", report.degenerate.join(", "));
    }
}

pub fn filter(args: FilterArgs) -> Result<()> {
    let keywords = load_keywords(args.keywords.as_deref(), args.builtin_keywords.as_deref())?;
    let pool = load_plain_corpus(&args.corpus)?;
    let labels = keyword_predictions(&pool, &keywords, args.fuzzy, args.max_distance)?;
    let mut bytes = Vec::new();
    write_predictions(&as_predictions(&pool, &labels), &mut bytes)?;
    write_output(&args.output, bytes)?;
    let related = labels.values().filter(|l| l.is_related()).count();
    println!(
        "{} matching: {} of {} documents related -> {}",
        if args.fuzzy { "fuzzy" } else { "exact" },
        related,
        pool.len(),
        args.output.display()
    );

    let gold = pool.gold_labels();
    if !gold.is_empty() {
        let tag = if args.fuzzy { "Fuzzy KWF" } else { "KWF" };
        let report = evaluate_labels(&labels, &gold)?.tagged(tag);
        let path = args.report.unwrap_or_else(|| sibling(&args.output, "report.json"));
        write_json(&path, &report)?;
        print_report(&report);
        println!("report -> {}", path.display());
    }
    Ok(())
}

#[derive(Debug, Args)]
pub struct EvaluateArgs {
    /// Corpus whose gold-labeled documents form the gold set.
    #[arg(long)]
    pub gold: PathBuf,
    /// Predictions, one {"id", "p_related"} line per corpus document.
    #[arg(long)]
    pub predictions: PathBuf,
    /// Method name recorded in the report.
    #[arg(long, default_value = "")]
    pub tag: String,
    /// EvaluationReport JSON output.
    #[arg(long)]
    pub output: PathBuf,
}

fn load_prediction_labels(path: &Path, pool: &Pool) -> Result<BTreeMap<String, Label>> {
    require_file(path)?;
    let predictions = import_predictions(path, pool).with_context(|| format!("reading predictions {}", path.display()))?;
    Ok(predictions.iter().map(|p| (p.id.clone(), p.label())).collect())
}

pub fn evaluate(args: EvaluateArgs) -> Result<()> {
    let pool = load_plain_corpus(&args.gold)?;
    let labels = load_prediction_labels(&args.predictions, &pool)?;
    let report = evaluate_labels(&labels, &pool.gold_labels())?.tagged(args.tag);
    write_json(&args.output, &report)?;
    print_report(&report);
    println!("report -> {}", args.output.display());
    Ok(())
}

/// One column of a comparison.
#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MethodEntry {
    pub tag: String,
    /// Predictions file, as written by `filter` or `predict`.
    #[serde(default)]
    pub predictions: Option<PathBuf>,
    /// Keyword file for a keyword-filter method.
    #[serde(default)]
    pub keywords: Option<PathBuf>,
    /// Builtin keyword list for a keyword-filter method.
    #[serde(default)]
    pub builtin_keywords: Option<String>,
    #[serde(default)]
    pub fuzzy: bool,
    #[serde(default = "default_max_distance")]
    pub max_distance: usize,
}

fn default_max_distance() -> usize {
    2
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Manifest {
    pub methods: Vec<MethodEntry>,
}

#[derive(Debug, Args)]
pub struct CompareArgs {
    /// Corpus whose gold-labeled documents form the gold set.
    #[arg(long)]
    pub gold: PathBuf,
    /// JSON manifest {"methods": [{"tag", "predictions"} | {"tag", "keywords" | "builtin_keywords", "fuzzy"?, "max_distance"?}]}; relative paths resolve against the manifest directory.
    #[arg(long)]
    pub manifest: PathBuf,
    /// CSV output: one row per metric and class, one column per method.
    #[arg(long)]
    pub output: PathBuf,
    /// Also write the rendered text table here.
    #[arg(long)]
    pub text_output: Option<PathBuf>,
    /// Mark the best value of each row with `*`.
    #[arg(long)]
    pub bold_best: bool,
}

fn method_labels(entry: &MethodEntry, base: &Path, pool: &Pool) -> Result<BTreeMap<String, Label>> {
    let resolve = |p: &PathBuf| if p.is_absolute() { p.clone() } else { base.join(p) };
    match (&entry.predictions, &entry.keywords, &entry.builtin_keywords) {
        (Some(path), None, None) => load_prediction_labels(&resolve(path), pool),
        (None, keywords, builtin) if keywords.is_some() != builtin.is_some() => {
            let keywords = load_keywords(keywords.as_ref().map(resolve).as_deref(), builtin.as_deref())?;
            keyword_predictions(pool, &keywords, entry.fuzzy, entry.max_distance)
        }
        _ => bail!(
            "method `{}` needs exactly one of `predictions`, `keywords` or `builtin_keywords`",
            entry.tag
        ),
    }
}

pub fn compare(args: CompareArgs) -> Result<()> {
    require_file(&args.manifest)?;
    let manifest: Manifest = serde_json::from_str(
        &std::fs::read_to_string(&args.manifest).with_context(|| format!("reading {}", args.manifest.display()))?,
    )
    .with_context(|| format!("parsing manifest {}", args.manifest.display()))?;
    let pool = load_plain_corpus(&args.gold)?;
    let base = args.manifest.parent().unwrap_or(Path::new("."));
    let methods = manifest
        .methods
        .iter()
        .map(|m| Ok((m.tag.clone(), method_labels(m, base, &pool)?)))
        .collect::<Result<Vec<_>>>()?;
    let table = compare_methods(&methods, &pool.gold_labels())?;
    write_output(&args.output, table.to_csv())?;
    let text = table.render_text(args.bold_best);
    if let Some(path) = &args.text_output {
        write_output(path, &text)?;
    }
    print!("{text}");
    println!("table -> {}", args.output.display());
    Ok(())
}
