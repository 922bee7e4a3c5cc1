//! `al-simulate`: active learning with gold labels standing in for annotators.

use std::fmt::Write as _;
use std::path::PathBuf;
use std::sync::Arc;

use anyhow::{bail, Context, Result};
use clap::Args;

use crisis_al_core::engine::{run_simulated, FeatureSource};
use crisis_al_core::synthetic::{separable_corpus, SyntheticSpec};
use crisis_al_core::{Pool, RoundMetrics, SessionConfig, Strategy};

use crate::io::{load_plain_corpus, sibling, write_output};
use crate::learn::{FeatureArgs, ModelArgs};

pub const CSV_HEADER: &str = "repeat,round,labeled_count,accuracy,f1_unrelated,f1_related";
pub const SUMMARY_HEADER: &str =
    "round,repeats,labeled_count,accuracy_mean,accuracy_std,f1_unrelated_mean,f1_unrelated_std,f1_related_mean,f1_related_std";

#[derive(Debug, Args)]
pub struct SimulateArgs {
    /// Corpus with gold labels for every document.
    #[arg(long, required_unless_present = "synthetic")]
    pub corpus: Option<PathBuf>,
    /// Use a generated two-class corpus of this many documents instead of --corpus.
    #[arg(long, conflicts_with = "corpus")]
    pub synthetic: Option<usize>,
    /// Gold-labeled test corpus; when omitted, a stratified --test-fraction of the corpus is held out.
    #[arg(long)]
    pub test_corpus: Option<PathBuf>,
    #[arg(long, default_value_t = 0.2, conflicts_with = "test_corpus")]
    pub test_fraction: f64,
    /// Query strategy: random, lc, pe, bt, gcs or dal.
    #[arg(long, default_value = "gcs")]
    pub strategy: Strategy,
    /// Query rounds after the random seed batch.
    #[arg(long, default_value_t = 10)]
    pub rounds: usize,
    /// Documents per query round.
    #[arg(long, default_value_t = 20)]
    pub batch: usize,
    /// Documents in the random seed batch.
    #[arg(long, default_value_t = 20)]
    pub seed_batch: usize,
    /// Base seed; repeat r uses seed + r for the split, the seed batch and the model.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 1)]
    pub repeats: usize,
    /// Subsample the unlabeled partition to at most this many documents.
    #[arg(long)]
    pub unlabeled_limit: Option<usize>,
    #[command(flatten)]
    pub features: FeatureArgs,
    #[command(flatten)]
    pub model: ModelArgs,
    /// Metrics CSV output with header `repeat,round,labeled_count,accuracy,f1_unrelated,f1_related`.
    #[arg(long)]
    pub output: PathBuf,
    /// Per-round mean and sample standard deviation, written when --repeats > 1 [default: <output stem>.summary.csv].
    #[arg(long)]
    pub summary: Option<PathBuf>,
}

impl SimulateArgs {
    fn config(&self, seed: u64) -> SessionConfig {
        SessionConfig {
            rounds: self.rounds,
            batch_size: self.batch,
            seed_batch_size: self.seed_batch,
            strategy: self.strategy,
            seed,
            feature_source: if self.features.embeddings.is_some() { FeatureSource::External } else { FeatureSource::Tfidf },
            min_df: self.features.min_df,
            max_features: self.features.max_features,
            model: self.model.hyperparams(seed),
            unlabeled_limit: self.unlabeled_limit,
        }
    }

    fn corpus(&self) -> Result<Pool> {
        match (&self.corpus, self.synthetic) {
            (Some(path), None) => load_plain_corpus(path),
            (None, Some(documents)) => Ok(separable_corpus(&SyntheticSpec {
                documents,
                seed: self.seed,
                ..SyntheticSpec::default()
            })),
            _ => bail!("give exactly one of --corpus or --synthetic"),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Spread {
    pub mean: f64,
    pub std: f64,
}

/// Mean and sample standard deviation (zero for a single value).
pub fn spread(values: &[f64]) -> Spread {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let std = if values.len() > 1 {
        (values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt()
    } else {
        0.0
    };
    Spread { mean, std }
}

fn csv_rows(runs: &[Vec<RoundMetrics>]) -> String {
    let mut out = format!("{CSV_HEADER}\n");
    for (repeat, metrics) in runs.iter().enumerate() {
        for m in metrics {
            let _ = writeln!(out, "{repeat},{}", m.csv_row());
        }
    }
    out
}

fn summary_rows(runs: &[Vec<RoundMetrics>]) -> Vec<(usize, usize, usize, [Spread; 3])> {
    let rounds = runs.iter().map(Vec::len).max().unwrap_or(0);
    (0..rounds)
        .map(|round| {
            let at: Vec<&RoundMetrics> = runs.iter().filter_map(|r| r.get(round)).collect();
            let pick = |f: fn(&RoundMetrics) -> f64| spread(&at.iter().map(|m| f(m)).collect::<Vec<_>>());
            (
                round,
                at.len(),
                at[0].labeled_count,
                [pick(|m| m.accuracy), pick(|m| m.f1_unrelated), pick(|m| m.f1_related)],
            )
        })
        .collect()
}

fn summary_csv(runs: &[Vec<RoundMetrics>]) -> String {
    let mut out = format!("{SUMMARY_HEADER}\n");
    for (round, repeats, labeled, [acc, f0, f1]) in summary_rows(runs) {
        let _ = writeln!(
            out,
            "{round},{repeats},{labeled},{:.6},{:.6},{:.6},{:.6},{:.6},{:.6}",
            acc.mean, acc.std, f0.mean, f0.std, f1.mean, f1.std
        );
    }
    out
}

pub fn simulate(args: SimulateArgs) -> Result<()> {
    if args.repeats == 0 {
        bail!("--repeats must be at least 1");
    }
    let corpus = args.corpus()?;
    let test = args.test_corpus.as_deref().map(load_plain_corpus).transpose()?;
    let mut runs = Vec::with_capacity(args.repeats);
    for repeat in 0..args.repeats {
        let seed = args.seed + repeat as u64;
        let pool = match &test {
            Some(test) => corpus.with_test_set(test)?,
            None => corpus.split(args.test_fraction, seed)?,
        };
        let external = args.features.external(&pool)?;
        let metrics = run_simulated(Arc::new(pool), args.config(seed), external)
            .with_context(|| format!("repeat {repeat} (seed {seed})"))?;
        runs.push(metrics);
    }
    write_output(&args.output, csv_rows(&runs))?;

    println!("strategy {} | {} repeat(s) | metrics -> {}", args.strategy, args.repeats, args.output.display());
    println!("round  labeled  accuracy          f1_unrelated      f1_related");
    for (round, _, labeled, [acc, f0, f1]) in summary_rows(&runs) {
        println!(
            "{round:>5}  {labeled:>7}  {:.4} ± {:.4}   {:.4} ± {:.4}   {:.4} ± {:.4}",
            acc.mean, acc.std, f0.mean, f0.std, f1.mean, f1.std
        );
    }
    if args.repeats > 1 {
        let path = args.summary.clone().unwrap_or_else(|| sibling(&args.output, "summary.csv"));
        write_output(&path, summary_csv(&runs))?;
        println!("summary -> {}", path.display());
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn spread_uses_sample_deviation() {
        let s = spread(&[1.0, 3.0]);
        assert_eq!(s.mean, 2.0);
        assert!((s.std - 2f64.sqrt()).abs() < 1e-12);
        assert_eq!(spread(&[5.0]).std, 0.0);
    }
}
