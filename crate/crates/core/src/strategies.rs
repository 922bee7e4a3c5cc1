//! Pool-based query strategies.
//!
//! Every strategy returns exactly `batch_size` distinct unlabeled ids and is
//! deterministic given its context. Ties are always broken by ascending id.

use std::cmp::Ordering;
use std::collections::{BTreeMap, HashMap, HashSet};
use std::fmt;
use std::str::FromStr;

use rand::seq::index;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::features::FeatureMatrix;
use crate::model::{fit, Hyperparams, TrainingSet};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Strategy {
    Random,
    Lc,
    Pe,
    Bt,
    Gcs,
    Dal,
}

impl Strategy {
    pub const ALL: [Strategy; 6] = [
        Strategy::Random,
        Strategy::Lc,
        Strategy::Pe,
        Strategy::Bt,
        Strategy::Gcs,
        Strategy::Dal,
    ];

    pub fn token(self) -> &'static str {
        match self {
            Strategy::Random => "random",
            Strategy::Lc => "lc",
            Strategy::Pe => "pe",
            Strategy::Bt => "bt",
            Strategy::Gcs => "gcs",
            Strategy::Dal => "dal",
        }
    }

    pub fn needs_predictions(self) -> bool {
        matches!(self, Strategy::Lc | Strategy::Pe | Strategy::Bt)
    }

    pub fn needs_features(self) -> bool {
        matches!(self, Strategy::Gcs | Strategy::Dal)
    }

    pub fn query(self, ctx: &QueryContext<'_>) -> Result<QueryBatch> {
        match self {
            Strategy::Random => query_random(ctx),
            Strategy::Lc => query_least_confidence(ctx),
            Strategy::Pe => query_prediction_entropy(ctx),
            Strategy::Bt => query_breaking_ties(ctx),
            Strategy::Gcs => query_greedy_coreset(ctx),
            Strategy::Dal => query_discriminative(ctx),
        }
    }
}

impl FromStr for Strategy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Strategy::ALL
            .into_iter()
            .find(|st| st.token() == s.to_lowercase())
            .ok_or_else(|| Error::invalid(format!("unknown strategy `{s}` (random|lc|pe|bt|gcs|dal)")))
    }
}

impl fmt::Display for Strategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.token())
    }
}

/// Inputs a strategy may consult. Uncertainty strategies need `predictions`,
/// GCS and DAL need `features`.
#[derive(Clone, Debug)]
pub struct QueryContext<'a> {
    pub unlabeled_ids: &'a [String],
    pub labeled_ids: &'a [String],
    pub predictions: Option<&'a HashMap<String, f64>>,
    pub features: Option<&'a FeatureMatrix>,
    pub batch_size: usize,
    pub seed: u64,
    /// Discriminator settings for DAL.
    pub discriminator: Hyperparams,
}

impl<'a> QueryContext<'a> {
    pub fn new(unlabeled_ids: &'a [String], labeled_ids: &'a [String], batch_size: usize, seed: u64) -> Self {
        QueryContext {
            unlabeled_ids,
            labeled_ids,
            predictions: None,
            features: None,
            batch_size,
            seed,
            discriminator: Hyperparams::default(),
        }
    }

    pub fn with_predictions(mut self, predictions: &'a HashMap<String, f64>) -> Self {
        self.predictions = Some(predictions);
        self
    }

    pub fn with_features(mut self, features: &'a FeatureMatrix) -> Self {
        self.features = Some(features);
        self
    }

    fn check_batch(&self) -> Result<()> {
        if self.batch_size == 0 {
            return Err(Error::invalid("batch size must be positive"));
        }
        if self.batch_size > self.unlabeled_ids.len() {
            return Err(Error::invalid(format!(
                "batch size {} exceeds the {} unlabeled documents",
                self.batch_size,
                self.unlabeled_ids.len()
            )));
        }
        Ok(())
    }

    fn predictions(&self) -> Result<Vec<(&'a str, f64)>> {
        let preds = self
            .predictions
            .ok_or_else(|| Error::invalid("strategy needs model predictions"))?;
        let mut missing = Vec::new();
        let mut out = Vec::with_capacity(self.unlabeled_ids.len());
        for id in self.unlabeled_ids {
            match preds.get(id) {
                Some(&p) => out.push((id.as_str(), p)),
                None => missing.push(id.clone()),
            }
        }
        if !missing.is_empty() {
            return Err(Error::MissingIds {
                what: "unlabeled ids without predictions".into(),
                ids: missing,
            });
        }
        Ok(out)
    }

    fn features(&self, include_labeled: bool) -> Result<&'a FeatureMatrix> {
        let features = self
            .features
            .ok_or_else(|| Error::invalid("strategy needs feature vectors"))?;
        let labeled: &[String] = if include_labeled { self.labeled_ids } else { &[] };
        let missing = features.missing_ids(self.unlabeled_ids.iter().chain(labeled));
        if !missing.is_empty() {
            return Err(Error::MissingIds {
                what: "ids without feature rows".into(),
                ids: missing,
            });
        }
        Ok(features)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct QueryBatch {
    pub ids: Vec<String>,
    pub strategy: Strategy,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub scores: Option<BTreeMap<String, f64>>,
}

pub fn query_random(ctx: &QueryContext<'_>) -> Result<QueryBatch> {
    ctx.check_batch()?;
    let mut rng = ChaCha8Rng::seed_from_u64(ctx.seed);
    let picks = index::sample(&mut rng, ctx.unlabeled_ids.len(), ctx.batch_size);
    Ok(QueryBatch {
        ids: picks.iter().map(|i| ctx.unlabeled_ids[i].clone()).collect(),
        strategy: Strategy::Random,
        scores: None,
    })
}

/// Takes the `batch_size` ids with the smallest key, ties by ascending id.
fn rank_ascending(ctx: &QueryContext<'_>, strategy: Strategy, keyed: Vec<(&str, f64)>) -> QueryBatch {
    let mut keyed = keyed;
    keyed.sort_by(|a, b| a.1.total_cmp(&b.1).then_with(|| a.0.cmp(b.0)));
    keyed.truncate(ctx.batch_size);
    QueryBatch {
        ids: keyed.iter().map(|(id, _)| id.to_string()).collect(),
        strategy,
        scores: Some(keyed.into_iter().map(|(id, s)| (id.to_string(), s)).collect()),
    }
}

/// Ranks by the minority probability `min(p, 1 - p)`, most uncertain first.
/// Confidence, entropy and margin are all monotone in this key, so the three
/// uncertainty strategies share one ordering and differ only in the reported
/// score.
fn rank_by_uncertainty(ctx: &QueryContext<'_>, strategy: Strategy, score: fn(f64) -> f64) -> Result<QueryBatch> {
    ctx.check_batch()?;
    let mut keyed: Vec<(&str, f64)> = ctx.predictions()?;
    keyed.sort_by(|a, b| {
        let (qa, qb) = (a.1.min(1.0 - a.1), b.1.min(1.0 - b.1));
        qb.total_cmp(&qa).then_with(|| a.0.cmp(b.0))
    });
    keyed.truncate(ctx.batch_size);
    Ok(QueryBatch {
        ids: keyed.iter().map(|(id, _)| id.to_string()).collect(),
        strategy,
        scores: Some(keyed.into_iter().map(|(id, p)| (id.to_string(), score(p))).collect()),
    })
}

/// Lowest confidence `max(p, 1 - p)` first.
pub fn query_least_confidence(ctx: &QueryContext<'_>) -> Result<QueryBatch> {
    rank_by_uncertainty(ctx, Strategy::Lc, |p| p.max(1.0 - p))
}

/// Binary entropy in nats, with `0 ln 0 = 0`.
pub fn binary_entropy(p: f64) -> f64 {
    let term = |x: f64| if x <= 0.0 { 0.0 } else { -x * x.ln() };
    term(p) + term(1.0 - p)
}

/// Highest prediction entropy first.
pub fn query_prediction_entropy(ctx: &QueryContext<'_>) -> Result<QueryBatch> {
    rank_by_uncertainty(ctx, Strategy::Pe, binary_entropy)
}

/// Smallest margin `|p - (1 - p)|` first.
pub fn query_breaking_ties(ctx: &QueryContext<'_>) -> Result<QueryBatch> {
    rank_by_uncertainty(ctx, Strategy::Bt, |p| (2.0 * p - 1.0).abs())
}

/// Greedy k-center selection in Euclidean space.
///
/// Centers start as the labeled ids. With no labeled ids, the unlabeled
/// point with the lowest id opens the batch as the first center. Each step
/// then adds the unlabeled point farthest from its nearest center.
pub fn query_greedy_coreset(ctx: &QueryContext<'_>) -> Result<QueryBatch> {
    ctx.check_batch()?;
    let features = ctx.features(true)?;

    // Candidates sorted by id so the first maximum found is the lowest id.
    let mut candidates: Vec<(&str, usize)> = ctx
        .unlabeled_ids
        .iter()
        .map(|id| (id.as_str(), features.position(id).expect("checked")))
        .collect();
    candidates.sort_by(|a, b| a.0.cmp(b.0));
    let mut nearest = vec![f64::INFINITY; candidates.len()];
    let mut taken = vec![false; candidates.len()];
    let mut selected = Vec::with_capacity(ctx.batch_size);
    let mut scores = BTreeMap::new();

    let update = |nearest: &mut [f64], center: usize| {
        let center_row = features.row(center);
        nearest.par_iter_mut().zip(&candidates).for_each(|(d, &(_, pos))| {
            let dist = features.row(pos).squared_distance(&center_row);
            if dist < *d {
                *d = dist;
            }
        });
    };

    let labeled: HashSet<&String> = ctx.labeled_ids.iter().collect();
    for id in ctx.labeled_ids {
        update(&mut nearest, features.position(id).expect("checked"));
    }
    if labeled.is_empty() {
        taken[0] = true;
        selected.push(candidates[0].0.to_string());
        update(&mut nearest, candidates[0].1);
    }
    while selected.len() < ctx.batch_size {
        let mut best: Option<usize> = None;
        for (k, &d) in nearest.iter().enumerate() {
            if taken[k] {
                continue;
            }
            if best.is_none_or(|b| d.total_cmp(&nearest[b]) == Ordering::Greater) {
                best = Some(k);
            }
        }
        let k = best.expect("batch size bounded by candidates");
        taken[k] = true;
        selected.push(candidates[k].0.to_string());
        scores.insert(candidates[k].0.to_string(), nearest[k].sqrt());
        update(&mut nearest, candidates[k].1);
    }
    Ok(QueryBatch {
        ids: selected,
        strategy: Strategy::Gcs,
        scores: Some(scores),
    })
}

/// Discriminator scores `P(unlabeled | x)` for every unlabeled id, from a
/// logistic model trained to separate labeled (0) from unlabeled (1) rows.
pub fn discriminator_scores(ctx: &QueryContext<'_>) -> Result<Vec<(String, f64)>> {
    if ctx.labeled_ids.is_empty() {
        return Err(Error::invalid("DAL requires labeled examples"));
    }
    let features = ctx.features(true)?;
    let mut set = TrainingSet::new(features.dim());
    for id in ctx.labeled_ids {
        set.push(features.row_by_id(id).expect("checked"), false, 1.0);
    }
    for id in ctx.unlabeled_ids {
        set.push(features.row_by_id(id).expect("checked"), true, 1.0);
    }
    let hyperparams = Hyperparams {
        seed: ctx.seed,
        ..ctx.discriminator
    };
    let (model, _) = fit(&set, hyperparams)?;
    Ok(ctx
        .unlabeled_ids
        .iter()
        .map(|id| (id.clone(), model.probability(features.row_by_id(id).expect("checked"))))
        .collect())
}

/// Picks the unlabeled ids the discriminator finds least like the labeled set.
pub fn query_discriminative(ctx: &QueryContext<'_>) -> Result<QueryBatch> {
    ctx.check_batch()?;
    let scores = discriminator_scores(ctx)?;
    let keyed = scores.iter().map(|(id, p)| (id.as_str(), -p)).collect();
    let mut batch = rank_ascending(ctx, Strategy::Dal, keyed);
    if let Some(s) = batch.scores.as_mut() {
        s.values_mut().for_each(|v| *v = -*v);
    }
    Ok(batch)
}
