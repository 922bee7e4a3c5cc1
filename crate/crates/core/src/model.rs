//! L2-regularized logistic regression trained by full-batch gradient
//! descent, plus the JSONL exchange format for externally computed
//! predictions.
//!
//! The objective is the example-weighted mean log-loss plus
//! `l2_penalty / 2 * |w|^2` (the bias is not penalized). Because the loss is
//! a mean, duplicating every training example leaves the fitted model unchanged.

use std::collections::{BTreeMap, HashMap};
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::corpus::{Label, Pool};
use crate::error::{Error, Result};
use crate::features::{FeatureMatrix, RowRef};

pub const MODEL_FORMAT: &str = "linear-model-v1";

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Hyperparams {
    pub learning_rate: f64,
    pub l2_penalty: f64,
    pub epochs: usize,
    pub seed: u64,
    /// Weight examples by inverse class frequency.
    #[serde(default)]
    pub class_weighting: bool,
}

impl Default for Hyperparams {
    fn default() -> Self {
        Hyperparams {
            learning_rate: 0.5,
            l2_penalty: 1e-4,
            epochs: 200,
            seed: 0,
            class_weighting: false,
        }
    }
}

impl Hyperparams {
    pub fn validate(&self) -> Result<()> {
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return Err(Error::invalid("learning rate must be positive and finite"));
        }
        if !(self.l2_penalty >= 0.0 && self.l2_penalty.is_finite()) {
            return Err(Error::invalid("l2 penalty must be nonnegative and finite"));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LinearModel {
    pub format: String,
    pub dim: usize,
    pub weights: Vec<f64>,
    pub bias: f64,
    pub trained_on: usize,
    pub hyperparams: Hyperparams,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Prediction {
    pub id: String,
    pub p_related: f64,
}

impl Prediction {
    pub fn p_unrelated(&self) -> f64 {
        1.0 - self.p_related
    }

    /// `related` iff `p_related >= 0.5`.
    pub fn label(&self) -> Label {
        Label::from_related(self.p_related >= 0.5)
    }
}

pub fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

/// `ln(1 + e^z)` without overflow.
fn softplus(z: f64) -> f64 {
    if z > 0.0 {
        z + (-z).exp().ln_1p()
    } else {
        z.exp().ln_1p()
    }
}

/// Rows with binary targets and per-example weights.
#[derive(Clone, Debug)]
pub struct TrainingSet<'a> {
    dim: usize,
    rows: Vec<RowRef<'a>>,
    targets: Vec<f64>,
    weights: Vec<f64>,
}

impl<'a> TrainingSet<'a> {
    pub fn new(dim: usize) -> Self {
        TrainingSet {
            dim,
            rows: Vec::new(),
            targets: Vec::new(),
            weights: Vec::new(),
        }
    }

    pub fn push(&mut self, row: RowRef<'a>, positive: bool, weight: f64) {
        self.rows.push(row);
        self.targets.push(if positive { 1.0 } else { 0.0 });
        self.weights.push(weight);
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    fn class_counts(&self) -> (usize, usize) {
        let pos = self.targets.iter().filter(|&&t| t > 0.5).count();
        (self.len() - pos, pos)
    }

    /// Replaces example weights with `n / (2 * n_class)`.
    pub fn apply_inverse_frequency_weights(&mut self) {
        let (neg, pos) = self.class_counts();
        let n = self.len() as f64;
        for (w, &t) in self.weights.iter_mut().zip(&self.targets) {
            let class = if t > 0.5 { pos } else { neg };
            *w = n / (2.0 * class as f64);
        }
    }

    pub fn loss(&self, weights: &[f64], bias: f64, l2_penalty: f64) -> f64 {
        let total: f64 = self.weights.iter().sum();
        let data: f64 = self
            .rows
            .iter()
            .zip(&self.targets)
            .zip(&self.weights)
            .map(|((row, &y), &s)| {
                let z = row.dot(weights) + bias;
                s * (softplus(z) - y * z)
            })
            .sum();
        let reg: f64 = weights.iter().map(|w| w * w).sum();
        data / total + 0.5 * l2_penalty * reg
    }

    /// Objective value with its gradient in the weights and the bias.
    pub fn loss_and_gradient(&self, weights: &[f64], bias: f64, l2_penalty: f64) -> (f64, Vec<f64>, f64) {
        let total: f64 = self.weights.iter().sum();
        let mut grad_w = vec![0.0; self.dim];
        let mut grad_b = 0.0;
        let mut data = 0.0;
        for ((row, &y), &s) in self.rows.iter().zip(&self.targets).zip(&self.weights) {
            let z = row.dot(weights) + bias;
            data += s * (softplus(z) - y * z);
            let residual = s * (sigmoid(z) - y) / total;
            row.for_each(|i, v| grad_w[i] += residual * v);
            grad_b += residual;
        }
        let mut reg = 0.0;
        for (g, &w) in grad_w.iter_mut().zip(weights) {
            *g += l2_penalty * w;
            reg += w * w;
        }
        (data / total + 0.5 * l2_penalty * reg, grad_w, grad_b)
    }

    /// Upper bound on the Lipschitz constant of the gradient.
    fn smoothness(&self, l2_penalty: f64) -> f64 {
        let max_sq = self
            .rows
            .iter()
            .map(|r| r.squared_norm() + 1.0)
            .fold(0.0f64, f64::max);
        0.25 * max_sq + l2_penalty
    }
}

/// Runs gradient descent from zero and returns the model together with the
/// objective before every epoch and after the last one.
///
/// The step is `min(learning_rate, 1 / L)` with `L` the smoothness bound of
/// the objective, so the loss never increases.
pub fn fit(set: &TrainingSet<'_>, hyperparams: Hyperparams) -> Result<(LinearModel, Vec<f64>)> {
    hyperparams.validate()?;
    let (neg, pos) = set.class_counts();
    if neg == 0 || pos == 0 {
        return Err(Error::DegenerateTrainingSet);
    }
    let mut set = set.clone();
    if hyperparams.class_weighting {
        set.apply_inverse_frequency_weights();
    }
    let step = hyperparams.learning_rate.min(1.0 / set.smoothness(hyperparams.l2_penalty));
    let mut weights = vec![0.0; set.dim];
    let mut bias = 0.0;
    let mut losses = Vec::with_capacity(hyperparams.epochs + 1);
    for _ in 0..hyperparams.epochs {
        let (loss, grad_w, grad_b) = set.loss_and_gradient(&weights, bias, hyperparams.l2_penalty);
        losses.push(loss);
        for (w, g) in weights.iter_mut().zip(&grad_w) {
            *w -= step * g;
        }
        bias -= step * grad_b;
    }
    losses.push(set.loss(&weights, bias, hyperparams.l2_penalty));
    if weights.iter().any(|w| !w.is_finite()) || !bias.is_finite() {
        return Err(Error::invalid("training diverged to non-finite parameters"));
    }
    let model = LinearModel {
        format: MODEL_FORMAT.to_string(),
        dim: set.dim,
        weights,
        bias,
        trained_on: set.len(),
        hyperparams,
    };
    Ok((model, losses))
}

fn labeled_set<'a>(features: &'a FeatureMatrix, labels: &BTreeMap<String, Label>) -> Result<TrainingSet<'a>> {
    let missing: Vec<String> = labels
        .keys()
        .filter(|id| features.position(id).is_none())
        .cloned()
        .collect();
    if !missing.is_empty() {
        return Err(Error::MissingIds {
            what: "labeled ids without features".into(),
            ids: missing,
        });
    }
    let mut set = TrainingSet::new(features.dim());
    for (id, label) in labels {
        let row = features.row_by_id(id).expect("checked above");
        set.push(row, label.is_related(), 1.0);
    }
    Ok(set)
}

pub fn train(features: &FeatureMatrix, labels: &BTreeMap<String, Label>, hyperparams: Hyperparams) -> Result<LinearModel> {
    train_with_trace(features, labels, hyperparams).map(|(model, _)| model)
}

pub fn train_with_trace(
    features: &FeatureMatrix,
    labels: &BTreeMap<String, Label>,
    hyperparams: Hyperparams,
) -> Result<(LinearModel, Vec<f64>)> {
    let set = labeled_set(features, labels)?;
    fit(&set, hyperparams)
}

impl LinearModel {
    /// Untrained model: zero weights, probability 0.5 everywhere.
    pub fn zeros(dim: usize, hyperparams: Hyperparams) -> Self {
        LinearModel {
            format: MODEL_FORMAT.to_string(),
            dim,
            weights: vec![0.0; dim],
            bias: 0.0,
            trained_on: 0,
            hyperparams,
        }
    }

    pub fn probability(&self, row: RowRef<'_>) -> f64 {
        sigmoid(row.dot(&self.weights) + self.bias)
    }

    pub fn predict(&self, features: &FeatureMatrix) -> Result<Vec<Prediction>> {
        if features.dim() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                found: features.dim(),
            });
        }
        Ok(features
            .ids()
            .iter()
            .enumerate()
            .map(|(i, id)| Prediction {
                id: id.clone(),
                p_related: self.probability(features.row(i)),
            })
            .collect())
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string(self)?)
    }

    pub fn digest(&self) -> String {
        let json = serde_json::to_vec(self).expect("model serializes");
        hex::encode(Sha256::digest(&json))
    }

    pub fn validate(&self) -> Result<()> {
        if self.format != MODEL_FORMAT {
            return Err(Error::VersionMismatch {
                expected: MODEL_FORMAT.into(),
                found: self.format.clone(),
            });
        }
        if self.weights.len() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                found: self.weights.len(),
            });
        }
        if self.weights.iter().any(|w| !w.is_finite()) || !self.bias.is_finite() {
            return Err(Error::invalid("model parameters must be finite"));
        }
        Ok(())
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let file = File::create(path).map_err(|e| Error::io(path, e))?;
        serde_json::to_writer(BufWriter::new(file), self)?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let file = File::open(path).map_err(|e| Error::io(path, e))?;
        let model: LinearModel = serde_json::from_reader(BufReader::new(file))?;
        model.validate()?;
        Ok(model)
    }
}

pub fn predict(model: &LinearModel, features: &FeatureMatrix) -> Result<Vec<Prediction>> {
    model.predict(features)
}

/// Reads `{"id", "p_related"}` lines and returns one prediction per pool
/// document, in pool order. Extra ids are ignored.
pub fn import_predictions(path: impl AsRef<Path>, pool: &Pool) -> Result<Vec<Prediction>> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    read_predictions(BufReader::new(file), &path.display().to_string(), pool)
}

pub fn read_predictions<R: BufRead>(reader: R, origin: &str, pool: &Pool) -> Result<Vec<Prediction>> {
    let mut by_id: HashMap<String, f64> = HashMap::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line.map_err(|e| Error::io(origin, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let row: Prediction = serde_json::from_str(&line).map_err(|e| Error::MalformedRow {
            origin: origin.to_string(),
            line: i + 1,
            message: e.to_string(),
        })?;
        if !(0.0..=1.0).contains(&row.p_related) {
            return Err(Error::ProbabilityOutOfRange {
                id: row.id,
                value: row.p_related,
            });
        }
        if by_id.insert(row.id.clone(), row.p_related).is_some() {
            return Err(Error::DuplicateId(row.id));
        }
    }
    let missing: Vec<String> = pool
        .documents()
        .iter()
        .filter(|d| !by_id.contains_key(&d.id))
        .map(|d| d.id.clone())
        .collect();
    if !missing.is_empty() {
        return Err(Error::MissingIds {
            what: format!("{origin} lacks predictions"),
            ids: missing,
        });
    }
    Ok(pool
        .documents()
        .iter()
        .map(|d| Prediction {
            id: d.id.clone(),
            p_related: by_id[&d.id],
        })
        .collect())
}

pub fn write_predictions<W: Write>(predictions: &[Prediction], writer: W) -> Result<()> {
    let mut w = BufWriter::new(writer);
    for p in predictions {
        serde_json::to_writer(&mut w, p)?;
        w.write_all(b"\n").map_err(|e| Error::io("<writer>", e))?;
    }
    w.flush().map_err(|e| Error::io("<writer>", e))
}
