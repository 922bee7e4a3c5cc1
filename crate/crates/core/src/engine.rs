//! Active-learning session state machine.
//!
//! A session starts by issuing a random seed batch. Each submission of
//! labels for the pending batch retrains the classifier from scratch,
//! records held-out metrics, and either issues the next batch with the
//! configured strategy or finishes after `rounds` query rounds.
//!
//! ```text
//! start ──▶ AwaitingLabels ──update──▶ ReadyToQuery ──query──▶ AwaitingLabels
//!                                  └──(last round)──▶ Finished
//! ```
//!
//! The checkpoint holds partitions, history and the latest model, and refers
//! to the pool by content digest. Resuming needs the same pool.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::corpus::{Label, LabeledId, Pool};
use crate::error::{Error, Result};
use crate::evaluation::evaluate;
use crate::features::{tfidf_for_pool, FeatureMatrix, SpaceTag};
use crate::model::{sigmoid, train, Hyperparams, LinearModel};
use crate::strategies::{QueryBatch, QueryContext, Strategy};

pub const ENGINE_VERSION: &str = "crisis-al-engine/1";

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FeatureSource {
    Tfidf,
    External,
}

impl FromStr for FeatureSource {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "tfidf" => Ok(FeatureSource::Tfidf),
            "external" => Ok(FeatureSource::External),
            other => Err(Error::invalid(format!("unknown feature source `{other}`"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SessionConfig {
    pub rounds: usize,
    pub batch_size: usize,
    pub seed_batch_size: usize,
    pub strategy: Strategy,
    pub seed: u64,
    pub feature_source: FeatureSource,
    pub min_df: usize,
    pub max_features: Option<usize>,
    pub model: Hyperparams,
    /// Uniformly subsample the unlabeled partition to at most this many documents.
    pub unlabeled_limit: Option<usize>,
}

impl Default for SessionConfig {
    fn default() -> Self {
        SessionConfig {
            rounds: 10,
            batch_size: 20,
            seed_batch_size: 20,
            strategy: Strategy::Gcs,
            seed: 0,
            feature_source: FeatureSource::Tfidf,
            min_df: 1,
            max_features: None,
            model: Hyperparams::default(),
            unlabeled_limit: None,
        }
    }
}

impl SessionConfig {
    /// Checks counts and hyperparameters. Zero rounds is accepted here
    /// (a seed-only run); see [`SessionConfig::validate_interactive`].
    pub fn validate(&self) -> Result<()> {
        if self.batch_size == 0 || self.seed_batch_size == 0 {
            return Err(Error::invalid("batch sizes must be at least 1"));
        }
        if self.min_df == 0 {
            return Err(Error::invalid("min_df must be at least 1"));
        }
        if self.unlabeled_limit == Some(0) {
            return Err(Error::invalid("unlabeled limit must be at least 1"));
        }
        self.model.validate()
    }

    /// Live annotation sessions need at least one query round.
    pub fn validate_interactive(&self) -> Result<()> {
        if self.rounds == 0 {
            return Err(Error::invalid("rounds must be at least 1"));
        }
        self.validate()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Phase {
    AwaitingLabels,
    ReadyToQuery,
    Finished,
}

impl fmt::Display for Phase {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Phase::AwaitingLabels => "awaiting_labels",
            Phase::ReadyToQuery => "ready_to_query",
            Phase::Finished => "finished",
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RoundMetrics {
    pub round: usize,
    pub labeled_count: usize,
    pub accuracy: f64,
    pub f1_unrelated: f64,
    pub f1_related: f64,
}

pub const METRICS_CSV_HEADER: &str = "round,labeled_count,accuracy,f1_unrelated,f1_related";

impl RoundMetrics {
    pub fn csv_row(&self) -> String {
        format!(
            "{},{},{:.6},{:.6},{:.6}",
            self.round, self.labeled_count, self.accuracy, self.f1_unrelated, self.f1_related
        )
    }
}

/// Header plus one line per round.
pub fn metrics_csv(metrics: &[RoundMetrics]) -> String {
    let mut out = String::from(METRICS_CSV_HEADER);
    out.push('\n');
    for m in metrics {
        out.push_str(&m.csv_row());
        out.push('\n');
    }
    out
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct LabeledEntry {
    pub id: String,
    pub label: Label,
    /// Round in which the label was submitted; `None` for labels the pool
    /// already carried when the session started.
    pub round: Option<usize>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RoundRecord {
    pub round: usize,
    pub strategy: Strategy,
    pub queried: Vec<String>,
    pub labels: Vec<LabeledId>,
    pub metrics: RoundMetrics,
    pub model_digest: String,
}

/// Everything a checkpoint persists.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SessionState {
    pub version: String,
    pub config: SessionConfig,
    pub pool_digest: String,
    pub labeled: Vec<LabeledEntry>,
    pub unlabeled: Vec<String>,
    pub test: Vec<LabeledId>,
    /// Sum of the three partition sizes; constant over the session.
    pub partition_total: usize,
    pub round: usize,
    pub phase: Phase,
    pub pending_batch: Option<QueryBatch>,
    pub history: Vec<RoundRecord>,
    pub model: Option<LinearModel>,
}

impl SessionState {
    pub fn metrics(&self) -> Vec<RoundMetrics> {
        self.history.iter().map(|r| r.metrics).collect()
    }

    pub fn labeled_count(&self) -> usize {
        self.labeled.len()
    }

    /// Verifies the structural invariants of a state.
    pub fn check_invariants(&self) -> Result<()> {
        let broken = |msg: String| Err(Error::InvalidState(msg));
        let mut seen = HashSet::new();
        for id in self
            .labeled
            .iter()
            .map(|e| &e.id)
            .chain(&self.unlabeled)
            .chain(self.test.iter().map(|t| &t.id))
        {
            if !seen.insert(id) {
                return broken(format!("`{id}` appears in two partitions"));
            }
        }
        if seen.len() != self.partition_total {
            return broken(format!(
                "partitions hold {} ids, expected {}",
                seen.len(),
                self.partition_total
            ));
        }
        if (self.phase == Phase::AwaitingLabels) != self.pending_batch.is_some() {
            return broken(format!("phase {} inconsistent with pending batch", self.phase));
        }
        if self.round > self.config.rounds {
            return broken(format!("round {} beyond {}", self.round, self.config.rounds));
        }
        let expected_history = match self.phase {
            Phase::AwaitingLabels => self.round,
            Phase::ReadyToQuery | Phase::Finished => self.round + 1,
        };
        if self.history.len() != expected_history {
            return broken(format!(
                "history has {} records, phase {} at round {} expects {expected_history}",
                self.history.len(),
                self.phase,
                self.round
            ));
        }
        if let Some(batch) = &self.pending_batch {
            let unlabeled: HashSet<&String> = self.unlabeled.iter().collect();
            if let Some(id) = batch.ids.iter().find(|id| !unlabeled.contains(id)) {
                return broken(format!("pending id `{id}` is not unlabeled"));
            }
        }
        let mut queried = HashSet::new();
        for id in self
            .history
            .iter()
            .flat_map(|r| &r.queried)
            .chain(self.pending_batch.iter().flat_map(|b| &b.ids))
        {
            if !queried.insert(id) {
                return broken(format!("`{id}` was queried twice"));
            }
        }
        Ok(())
    }
}

/// Fits the feature space a session runs in.
pub fn prepare_features(pool: &Pool, config: &SessionConfig, external: Option<FeatureMatrix>) -> Result<FeatureMatrix> {
    match (config.feature_source, external) {
        (FeatureSource::Tfidf, None) => Ok(tfidf_for_pool(pool, config.min_df, config.max_features)?.1),
        (FeatureSource::External, Some(m)) if m.space() == SpaceTag::External => Ok(m),
        (FeatureSource::Tfidf, Some(_)) => Err(Error::invalid("tfidf sessions compute their own features")),
        (FeatureSource::External, _) => Err(Error::invalid("external feature source needs imported embeddings")),
    }
}

fn round_seed(seed: u64, round: usize) -> u64 {
    seed ^ (round as u64 + 1).wrapping_mul(0x9E37_79B9_7F4A_7C15)
}

/// A running session: persisted state plus the pool and feature space it
/// refers to.
#[derive(Clone, Debug)]
pub struct Session {
    state: SessionState,
    pool: Arc<Pool>,
    features: Arc<FeatureMatrix>,
    checkpoint_path: Option<PathBuf>,
}

impl Session {
    /// Draws the random seed batch and waits for its labels.
    ///
    /// Needs nonempty unlabeled and test partitions, with at least
    /// `seed_batch_size` unlabeled documents.
    pub fn start(pool: Arc<Pool>, config: SessionConfig, external: Option<FeatureMatrix>) -> Result<Self> {
        config.validate()?;
        let mut unlabeled: Vec<String> = pool.unlabeled().to_vec();
        if let Some(limit) = config.unlabeled_limit {
            let kept: HashSet<String> = pool
                .subsample_unlabeled(limit, config.seed)
                .unlabeled()
                .iter()
                .cloned()
                .collect();
            unlabeled.retain(|id| kept.contains(id));
        }
        if pool.test().is_empty() {
            return Err(Error::invalid("pool has no test documents"));
        }
        if unlabeled.len() < config.seed_batch_size {
            return Err(Error::invalid(format!(
                "pool too small: {} unlabeled documents for a seed batch of {}",
                unlabeled.len(),
                config.seed_batch_size
            )));
        }
        let features = prepare_features(&pool, &config, external)?;
        let labeled: Vec<LabeledEntry> = pool
            .labeled()
            .iter()
            .map(|l| LabeledEntry {
                id: l.id.clone(),
                label: l.label,
                round: None,
            })
            .collect();
        let needed = labeled.iter().map(|e| &e.id).chain(&unlabeled).chain(pool.test().iter().map(|t| &t.id));
        let missing = features.missing_ids(needed);
        if !missing.is_empty() {
            return Err(Error::MissingIds {
                what: "session ids without feature rows".into(),
                ids: missing,
            });
        }

        let seed_batch = {
            let ctx = QueryContext::new(&unlabeled, &[], config.seed_batch_size, round_seed(config.seed, 0));
            Strategy::Random.query(&ctx)?
        };
        let state = SessionState {
            version: ENGINE_VERSION.to_string(),
            pool_digest: pool.digest(),
            partition_total: labeled.len() + unlabeled.len() + pool.test().len(),
            labeled,
            unlabeled,
            test: pool.test().to_vec(),
            round: 0,
            phase: Phase::AwaitingLabels,
            pending_batch: Some(seed_batch),
            history: Vec::new(),
            model: None,
            config,
        };
        state.check_invariants()?;
        Ok(Session {
            state,
            pool,
            features: Arc::new(features),
            checkpoint_path: None,
        })
    }

    /// Writes a checkpoint to `path` now and after every transition.
    pub fn with_checkpoint(mut self, path: impl Into<PathBuf>) -> Result<Self> {
        let path = path.into();
        write_checkpoint(&self.state, &path)?;
        self.checkpoint_path = Some(path);
        Ok(self)
    }

    pub fn state(&self) -> &SessionState {
        &self.state
    }

    pub fn pool(&self) -> &Arc<Pool> {
        &self.pool
    }

    pub fn features(&self) -> &Arc<FeatureMatrix> {
        &self.features
    }

    pub fn phase(&self) -> Phase {
        self.state.phase
    }

    pub fn pending_batch(&self) -> Option<&QueryBatch> {
        self.state.pending_batch.as_ref()
    }

    pub fn metrics(&self) -> Vec<RoundMetrics> {
        self.state.metrics()
    }

    pub fn checkpoint_path(&self) -> Option<&Path> {
        self.checkpoint_path.as_deref()
    }

    /// Labels for the pending batch, then the next query. Atomic: on error
    /// the session is unchanged.
    pub fn submit_labels(&mut self, labels: &BTreeMap<String, Label>) -> Result<RoundMetrics> {
        let mut next = self.state.clone();
        let metrics = apply_labels(&mut next, labels, &self.features)?;
        if next.phase == Phase::ReadyToQuery {
            issue_query(&mut next, &self.features)?;
        }
        self.commit(next)?;
        Ok(metrics)
    }

    /// Only the update half of [`Session::submit_labels`]; leaves the
    /// session in `ReadyToQuery` unless it finished.
    pub fn update(&mut self, labels: &BTreeMap<String, Label>) -> Result<RoundMetrics> {
        let mut next = self.state.clone();
        let metrics = apply_labels(&mut next, labels, &self.features)?;
        self.commit(next)?;
        Ok(metrics)
    }

    /// Issues the next batch from `ReadyToQuery`.
    pub fn query_next(&mut self) -> Result<&QueryBatch> {
        let mut next = self.state.clone();
        issue_query(&mut next, &self.features)?;
        self.commit(next)?;
        Ok(self.state.pending_batch.as_ref().expect("query leaves a pending batch"))
    }

    fn commit(&mut self, next: SessionState) -> Result<()> {
        next.check_invariants()?;
        if let Some(path) = &self.checkpoint_path {
            write_checkpoint(&next, path)?;
        }
        self.state = next;
        Ok(())
    }

    pub fn checkpoint(&self, path: impl AsRef<Path>) -> Result<()> {
        write_checkpoint(&self.state, path.as_ref())
    }

    /// Restores a session from a checkpoint. `pool` must hash to the digest
    /// recorded in the checkpoint; external sessions pass the same embeddings.
    pub fn resume(path: impl AsRef<Path>, pool: Arc<Pool>, external: Option<FeatureMatrix>) -> Result<Self> {
        let path = path.as_ref();
        let state = read_checkpoint(path)?;
        let digest = pool.digest();
        if digest != state.pool_digest {
            return Err(Error::DigestMismatch {
                expected: state.pool_digest,
                found: digest,
            });
        }
        let features = prepare_features(&pool, &state.config, external)?;
        Ok(Session {
            state,
            pool,
            features: Arc::new(features),
            checkpoint_path: Some(path.to_path_buf()),
        })
    }

    /// Every human-assigned label with the round it was submitted in.
    pub fn labeled_export(&self) -> Vec<ExportRecord> {
        self.state
            .labeled
            .iter()
            .filter_map(|e| {
                let round = e.round?;
                let doc = self.pool.get(&e.id)?;
                Some(ExportRecord {
                    id: e.id.clone(),
                    text: doc.text.clone(),
                    lang: doc.lang.clone(),
                    label: e.label,
                    round,
                })
            })
            .collect()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExportRecord {
    pub id: String,
    pub text: String,
    pub lang: String,
    pub label: Label,
    pub round: usize,
}

/// Moves the pending batch into the labeled partition, retrains, and records
/// metrics.
fn apply_labels(state: &mut SessionState, labels: &BTreeMap<String, Label>, features: &FeatureMatrix) -> Result<RoundMetrics> {
    match state.phase {
        Phase::AwaitingLabels => {}
        Phase::Finished => return Err(Error::InvalidState("session is finished".into())),
        Phase::ReadyToQuery => return Err(Error::InvalidState("no batch is pending".into())),
    }
    let batch = state.pending_batch.take().expect("awaiting labels implies a batch");
    let pending: HashSet<&String> = batch.ids.iter().collect();
    let missing: Vec<String> = batch.ids.iter().filter(|id| !labels.contains_key(*id)).cloned().collect();
    let extra: Vec<String> = labels.keys().filter(|id| !pending.contains(id)).cloned().collect();
    if !missing.is_empty() || !extra.is_empty() {
        return Err(Error::LabelSetMismatch { missing, extra });
    }

    let submitted: Vec<LabeledId> = batch.ids.iter().map(|id| LabeledId::new(id.clone(), labels[id])).collect();
    state.unlabeled.retain(|id| !pending.contains(id));
    state.labeled.extend(submitted.iter().map(|l| LabeledEntry {
        id: l.id.clone(),
        label: l.label,
        round: Some(state.round),
    }));

    let model = fit_round_model(state, features)?;
    let metrics = test_metrics(state, &model, features)?;
    state.history.push(RoundRecord {
        round: state.round,
        strategy: batch.strategy,
        queried: batch.ids,
        labels: submitted,
        metrics,
        model_digest: model.digest(),
    });
    state.model = Some(model);
    state.phase = if state.round >= state.config.rounds || state.unlabeled.is_empty() {
        Phase::Finished
    } else {
        Phase::ReadyToQuery
    };
    Ok(metrics)
}

/// Retrains from scratch on all labels. With a single class present the
/// model predicts the smoothed class prior everywhere.
fn fit_round_model(state: &SessionState, features: &FeatureMatrix) -> Result<LinearModel> {
    let labels: BTreeMap<String, Label> = state.labeled.iter().map(|e| (e.id.clone(), e.label)).collect();
    let hyperparams = Hyperparams {
        seed: state.config.model.seed ^ state.config.seed,
        ..state.config.model
    };
    match train(features, &labels, hyperparams) {
        Ok(model) => Ok(model),
        Err(Error::DegenerateTrainingSet) => {
            let pos = labels.values().filter(|l| l.is_related()).count() as f64;
            let neg = labels.len() as f64 - pos;
            let mut model = LinearModel::zeros(features.dim(), hyperparams);
            model.bias = ((pos + 0.5) / (neg + 0.5)).ln();
            model.trained_on = labels.len();
            Ok(model)
        }
        Err(e) => Err(e),
    }
}

fn test_metrics(state: &SessionState, model: &LinearModel, features: &FeatureMatrix) -> Result<RoundMetrics> {
    let gold: BTreeMap<String, Label> = state.test.iter().map(|t| (t.id.clone(), t.label)).collect();
    let predictions: BTreeMap<String, Label> = gold
        .keys()
        .map(|id| {
            let row = features.row_by_id(id).expect("features cover the test ids");
            (id.clone(), Label::from_related(model.probability(row) >= 0.5))
        })
        .collect();
    let report = evaluate(&predictions, &gold)?;
    Ok(RoundMetrics {
        round: state.round,
        labeled_count: state.labeled.len(),
        accuracy: report.accuracy,
        f1_unrelated: report.unrelated.f1,
        f1_related: report.related.f1,
    })
}

/// Advances to the next round and queries it with the configured strategy.
/// A short final batch is issued when fewer than `batch_size` documents remain.
fn issue_query(state: &mut SessionState, features: &FeatureMatrix) -> Result<()> {
    if state.phase != Phase::ReadyToQuery {
        return Err(Error::InvalidState(format!("cannot query in phase {}", state.phase)));
    }
    let model = state.model.as_ref().expect("an update precedes every query");
    let next_round = state.round + 1;
    let labeled_ids: Vec<String> = state.labeled.iter().map(|e| e.id.clone()).collect();
    let batch_size = state.config.batch_size.min(state.unlabeled.len());
    let predictions: HashMap<String, f64> = if state.config.strategy.needs_predictions() {
        state
            .unlabeled
            .iter()
            .map(|id| {
                let row = features.row_by_id(id).expect("features cover the unlabeled ids");
                (id.clone(), sigmoid(row.dot(&model.weights) + model.bias))
            })
            .collect()
    } else {
        HashMap::new()
    };
    let mut ctx = QueryContext::new(
        &state.unlabeled,
        &labeled_ids,
        batch_size,
        round_seed(state.config.seed, next_round),
    )
    .with_features(features);
    ctx.discriminator = Hyperparams {
        class_weighting: false,
        ..Hyperparams::default()
    };
    if state.config.strategy.needs_predictions() {
        ctx = ctx.with_predictions(&predictions);
    }
    let batch = state.config.strategy.query(&ctx)?;
    state.round = next_round;
    state.pending_batch = Some(batch);
    state.phase = Phase::AwaitingLabels;
    Ok(())
}

pub fn write_checkpoint(state: &SessionState, path: &Path) -> Result<()> {
    let bytes = serde_json::to_vec_pretty(state)?;
    let tmp = path.with_extension("json.tmp");
    fs::write(&tmp, &bytes).map_err(|e| Error::io(&tmp, e))?;
    fs::rename(&tmp, path).map_err(|e| Error::io(path, e))
}

pub fn read_checkpoint(path: &Path) -> Result<SessionState> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    let value: serde_json::Value = serde_json::from_slice(&bytes).map_err(|e| Error::MalformedRow {
        origin: path.display().to_string(),
        line: e.line(),
        message: format!("checkpoint is not valid JSON: {e}"),
    })?;
    let version = value.get("version").and_then(|v| v.as_str()).unwrap_or("<none>");
    if version != ENGINE_VERSION {
        return Err(Error::VersionMismatch {
            expected: ENGINE_VERSION.to_string(),
            found: version.to_string(),
        });
    }
    let state: SessionState = serde_json::from_value(value).map_err(|e| Error::MalformedRow {
        origin: path.display().to_string(),
        line: 0,
        message: format!("checkpoint does not match the session schema: {e}"),
    })?;
    state.check_invariants()?;
    Ok(state)
}

/// Runs a whole session answering every query from gold labels.
pub fn run_simulated(pool: Arc<Pool>, config: SessionConfig, external: Option<FeatureMatrix>) -> Result<Vec<RoundMetrics>> {
    let missing: Vec<String> = pool
        .unlabeled()
        .iter()
        .filter(|id| pool.get(id).and_then(|d| d.gold_label).is_none())
        .cloned()
        .collect();
    if !missing.is_empty() {
        return Err(Error::MissingIds {
            what: "unlabeled documents without gold labels".into(),
            ids: missing,
        });
    }
    let mut session = Session::start(pool, config, external)?;
    drive_with_gold(&mut session)?;
    Ok(session.metrics())
}

/// Answers pending batches from gold labels until the session finishes.
pub fn drive_with_gold(session: &mut Session) -> Result<()> {
    while let Some(batch) = session.pending_batch() {
        let labels = gold_answers(session.pool(), &batch.ids)?;
        session.submit_labels(&labels)?;
    }
    Ok(())
}

/// Gold labels for `ids`, as an oracle annotator would give them.
pub fn gold_answers(pool: &Pool, ids: &[String]) -> Result<BTreeMap<String, Label>> {
    ids.iter()
        .map(|id| {
            pool.get(id)
                .and_then(|d| d.gold_label)
                .map(|l| (id.clone(), l))
                .ok_or_else(|| Error::MissingIds {
                    what: "queried documents without gold labels".into(),
                    ids: vec![id.clone()],
                })
        })
        .collect()
}
