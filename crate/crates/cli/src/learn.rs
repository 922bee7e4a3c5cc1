//! `train` and `predict`.

use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::Args;
use serde::{Deserialize, Serialize};

use crisis_al_core::features::{import_embeddings, tfidf_for_pool};
use crisis_al_core::model::{train as fit_model, write_predictions};
use crisis_al_core::{FeatureMatrix, Hyperparams, LinearModel, Pool, Vocabulary};

use crate::evaluate::print_report;
use crate::io::{load_plain_corpus, require_file, write_json, write_output};

pub const BUNDLE_FORMAT: &str = "crisis-al-bundle-v1";

#[derive(Clone, Debug, Args)]
pub struct ModelArgs {
    /// Gradient descent step size (clamped to the inverse smoothness constant).
    #[arg(long, default_value_t = 0.5)]
    pub learning_rate: f64,
    /// L2 penalty on the weights.
    #[arg(long, default_value_t = 1e-4)]
    pub l2_penalty: f64,
    /// Full-batch gradient steps.
    #[arg(long, default_value_t = 200)]
    pub epochs: usize,
    /// Weight examples by inverse class frequency.
    #[arg(long)]
    pub class_weighting: bool,
}

impl ModelArgs {
    pub fn hyperparams(&self, seed: u64) -> Hyperparams {
        Hyperparams {
            learning_rate: self.learning_rate,
            l2_penalty: self.l2_penalty,
            epochs: self.epochs,
            seed,
            class_weighting: self.class_weighting,
        }
    }
}

#[derive(Clone, Debug, Args)]
pub struct FeatureArgs {
    /// External embeddings: a {"format": "emb-v1", "dim"} header line, then {"id", "vec"} lines. Replaces TF-IDF.
    #[arg(long)]
    pub embeddings: Option<PathBuf>,
    /// TF-IDF: minimum document frequency of a term.
    #[arg(long, default_value_t = 1)]
    pub min_df: usize,
    /// TF-IDF: keep at most this many terms.
    #[arg(long)]
    pub max_features: Option<usize>,
}

impl FeatureArgs {
    pub fn external(&self, pool: &Pool) -> Result<Option<FeatureMatrix>> {
        match &self.embeddings {
            Some(path) => {
                require_file(path)?;
                let matrix = import_embeddings(path, pool).with_context(|| format!("reading embeddings {}", path.display()))?;
                Ok(Some(matrix))
            }
            None => Ok(None),
        }
    }
}

/// A trained model with the vocabulary that produced its feature space.
#[derive(Debug, Serialize, Deserialize)]
pub struct ModelBundle {
    pub format: String,
    /// `None` when the model was trained on external embeddings.
    pub vocabulary: Option<Vocabulary>,
    pub model: LinearModel,
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    /// Corpus; every gold-labeled document is a training example.
    #[arg(long)]
    pub corpus: PathBuf,
    #[command(flatten)]
    pub features: FeatureArgs,
    #[command(flatten)]
    pub model: ModelArgs,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Model bundle output (JSON).
    #[arg(long)]
    pub output: PathBuf,
}

pub fn train(args: TrainArgs) -> Result<()> {
    let pool = load_plain_corpus(&args.corpus)?;
    let (vocabulary, features) = match args.features.external(&pool)? {
        Some(matrix) => (None, matrix),
        None => {
            let (vocab, matrix) = tfidf_for_pool(&pool, args.features.min_df, args.features.max_features)?;
            (Some(vocab), matrix)
        }
    };
    let labels = pool.gold_labels();
    if labels.is_empty() {
        bail!("{} has no gold-labeled documents to train on", args.corpus.display());
    }
    let model = fit_model(&features, &labels, args.model.hyperparams(args.seed))?;
    let bundle = ModelBundle {
        format: BUNDLE_FORMAT.to_string(),
        vocabulary,
        model,
    };
    write_json(&args.output, &bundle)?;
    println!(
        "trained on {} documents, {} features -> {}",
        labels.len(),
        features.dim(),
        args.output.display()
    );
    Ok(())
}

pub fn load_bundle(path: &Path) -> Result<ModelBundle> {
    require_file(path)?;
    let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let bundle: ModelBundle = serde_json::from_str(&text).with_context(|| format!("parsing model bundle {}", path.display()))?;
    if bundle.format != BUNDLE_FORMAT {
        bail!("{}: unsupported bundle format `{}`", path.display(), bundle.format);
    }
    bundle.model.validate()?;
    Ok(bundle)
}

#[derive(Debug, Args)]
pub struct PredictArgs {
    /// Model bundle written by `train`.
    #[arg(long)]
    pub model: PathBuf,
    /// Corpus to score.
    #[arg(long)]
    pub corpus: PathBuf,
    /// Embeddings for the corpus; required iff the model was trained on embeddings.
    #[arg(long)]
    pub embeddings: Option<PathBuf>,
    /// Predictions output, one {"id", "p_related"} line per document.
    #[arg(long)]
    pub output: PathBuf,
}

pub fn predict(args: PredictArgs) -> Result<()> {
    let bundle = load_bundle(&args.model)?;
    let pool = load_plain_corpus(&args.corpus)?;
    let features = match (&bundle.vocabulary, &args.embeddings) {
        (Some(vocab), None) => vocab.transform(pool.documents())?,
        (None, Some(path)) => {
            require_file(path)?;
            import_embeddings(path, &pool).with_context(|| format!("reading embeddings {}", path.display()))?
        }
        (Some(_), Some(_)) => bail!("the model uses TF-IDF features; drop --embeddings"),
        (None, None) => bail!("the model was trained on embeddings; pass --embeddings"),
    };
    let predictions = bundle.model.predict(&features)?;
    let mut bytes = Vec::new();
    write_predictions(&predictions, &mut bytes)?;
    write_output(&args.output, bytes)?;
    let related = predictions.iter().filter(|p| p.label().is_related()).count();
    println!(
        "scored {} documents, {} related -> {}",
        predictions.len(),
        related,
        args.output.display()
    );
    let gold = pool.gold_labels();
    if !gold.is_empty() {
        let labels = predictions.iter().map(|p| (p.id.clone(), p.label())).collect();
        print_report(&crisis_al_core::evaluation::evaluate(&labels, &gold)?);
    }
    Ok(())
}
