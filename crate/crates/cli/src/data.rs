//! `ingest` and `prefilter`.

use std::path::PathBuf;

use anyhow::Result;
use clap::Args;

use crisis_al_core::corpus::CorpusFormat;
use crisis_al_core::{LabelMapping, Pool};

use crate::io::{load_corpus, load_keywords, require_file, write_output, CorpusSource};

#[derive(Debug, Args)]
pub struct IngestArgs {
    /// Raw corpus: JSON-lines ({"id", "text", "lang"?, "label"?, "source"?, "scheme"?}) or CSV with the same columns.
    #[arg(long)]
    pub input: PathBuf,
    /// Input format; guessed from the extension when omitted.
    #[arg(long)]
    pub format: Option<CorpusFormat>,
    /// CSV of (scheme, source, target) rows mapping source labels to related/unrelated/drop.
    #[arg(long, conflicts_with = "crisislex_mapping")]
    pub mapping: Option<PathBuf>,
    /// Use the builtin CrisisLex label mapping.
    #[arg(long)]
    pub crisislex_mapping: bool,
    /// Label scheme for rows that name none.
    #[arg(long)]
    pub scheme: Option<String>,
    /// Drop documents whose normalized text repeats an earlier one.
    #[arg(long)]
    pub dedup: bool,
    /// Canonical JSON-lines output.
    #[arg(long)]
    pub output: PathBuf,
}

pub fn ingest(args: IngestArgs) -> Result<()> {
    let mapping = match (&args.mapping, args.crisislex_mapping) {
        (Some(path), _) => {
            require_file(path)?;
            Some(LabelMapping::from_csv_path(path)?)
        }
        (None, true) => Some(LabelMapping::crisislex()),
        (None, false) => None,
    };
    let source = CorpusSource {
        format: args.format,
        mapping,
        scheme: args.scheme,
    };
    let mut pool = load_corpus(&args.input, &source)?;
    let read = pool.len();
    if args.dedup {
        pool = pool.dedup_texts();
    }
    save(&pool, &args.output)?;
    println!(
        "ingested {} documents ({} gold-labeled, {} duplicates dropped) -> {}",
        pool.len(),
        pool.gold_labels().len(),
        read - pool.len(),
        args.output.display()
    );
    Ok(())
}

#[derive(Debug, Args)]
pub struct PrefilterArgs {
    /// Corpus to narrow (JSON-lines or CSV).
    #[arg(long)]
    pub corpus: PathBuf,
    /// Keyword file: one keyword per line, `#` starts a comment.
    #[arg(long)]
    pub keywords: Option<PathBuf>,
    /// Builtin keyword list: crisislex, germany-flood, chile-forest-fires, chile-prefilter.
    #[arg(long, conflicts_with = "keywords")]
    pub builtin_keywords: Option<String>,
    /// JSON-lines output holding the documents that contain a keyword.
    #[arg(long)]
    pub output: PathBuf,
}

pub fn prefilter(args: PrefilterArgs) -> Result<()> {
    let keywords = load_keywords(args.keywords.as_deref(), args.builtin_keywords.as_deref())?;
    let pool = crate::io::load_plain_corpus(&args.corpus)?;
    let kept = pool.prefilter(&keywords);
    save(&kept, &args.output)?;
    println!(
        "kept {} of {} documents matching {} keywords -> {}",
        kept.len(),
        pool.len(),
        keywords.len(),
        args.output.display()
    );
    Ok(())
}

fn save(pool: &Pool, path: &std::path::Path) -> Result<()> {
    let mut bytes = Vec::new();
    pool.write_jsonl(&mut bytes)?;
    write_output(path, bytes)
}
