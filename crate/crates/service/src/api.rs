//! Request and response bodies.

use std::collections::BTreeMap;

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crisis_al_core::engine::{Phase, SessionConfig};
use crisis_al_core::Label;

use crate::error::ApiError;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SessionHandle {
    pub session_id: String,
    pub created_at: DateTime<Utc>,
    pub corpus: String,
    pub config: SessionConfig,
    pub dual_annotation: bool,
    pub status: Phase,
}

/// A handle plus progress, as served by `GET /sessions/{id}`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SessionView {
    #[serde(flatten)]
    pub handle: SessionHandle,
    pub round: usize,
    pub labeled_count: usize,
    pub pending: usize,
    pub test_size: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AnnotationItem {
    pub doc_id: String,
    pub text: String,
    pub lang: String,
    pub round: usize,
    pub position_in_batch: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SplitSpec {
    #[serde(default = "default_test_fraction")]
    pub test_fraction: f64,
    /// Defaults to the session seed.
    pub seed: Option<u64>,
}

fn default_test_fraction() -> f64 {
    0.2
}

impl Default for SplitSpec {
    fn default() -> Self {
        SplitSpec {
            test_fraction: default_test_fraction(),
            seed: None,
        }
    }
}

/// Body of `POST /sessions`.
///
/// The test partition comes from `test_corpus` when given, otherwise from a
/// stratified split of the corpus's gold-labeled documents.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CreateSession {
    pub corpus: String,
    #[serde(default)]
    pub config: SessionConfig,
    #[serde(default)]
    pub test_corpus: Option<String>,
    #[serde(default)]
    pub split: Option<SplitSpec>,
    /// Embedding file name under the data directory, for external feature sessions.
    #[serde(default)]
    pub embeddings: Option<String>,
    #[serde(default)]
    pub dual_annotation: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Annotation {
    pub annotator: String,
    pub labels: BTreeMap<String, Label>,
}

/// Body of `POST /sessions/{id}/labels`: either a plain `id -> 0|1` map, or
/// `{"annotations": [{"annotator": .., "labels": {..}}, ..]}` for sessions
/// with dual annotation.
#[derive(Clone, Debug, PartialEq)]
pub enum LabelSubmission {
    Single(BTreeMap<String, Label>),
    Dual(Vec<Annotation>),
}

impl LabelSubmission {
    pub fn parse(body: Value) -> Result<Self, ApiError> {
        let bad = |e: serde_json::Error| ApiError::BadRequest(format!("invalid label body: {e}"));
        match body {
            Value::Object(ref map) if map.get("annotations").is_some_and(Value::is_array) => {
                #[derive(Deserialize)]
                #[serde(deny_unknown_fields)]
                struct Dual {
                    annotations: Vec<Annotation>,
                }
                let dual: Dual = serde_json::from_value(body).map_err(bad)?;
                Ok(LabelSubmission::Dual(dual.annotations))
            }
            Value::Object(_) => Ok(LabelSubmission::Single(serde_json::from_value(body).map_err(bad)?)),
            _ => Err(ApiError::BadRequest("label body must be a JSON object".into())),
        }
    }

    /// The labels to apply, after checking annotator agreement.
    pub fn resolve(self, dual_annotation: bool) -> Result<BTreeMap<String, Label>, ApiError> {
        match (self, dual_annotation) {
            (LabelSubmission::Single(labels), false) => Ok(labels),
            (LabelSubmission::Single(_), true) => Err(ApiError::BadRequest(
                "this session needs labels from two annotators".into(),
            )),
            (LabelSubmission::Dual(_), false) => Err(ApiError::BadRequest(
                "this session takes a plain id -> label map".into(),
            )),
            (LabelSubmission::Dual(annotations), true) => {
                let [first, second] = annotations.as_slice() else {
                    return Err(ApiError::BadRequest(format!(
                        "expected exactly two annotations, got {}",
                        annotations.len()
                    )));
                };
                if first.annotator.trim().is_empty() || first.annotator == second.annotator {
                    return Err(ApiError::BadRequest("annotators must be named and distinct".into()));
                }
                if first.labels.keys().ne(second.labels.keys()) {
                    return Err(ApiError::conflict("the two annotations cover different ids"));
                }
                let conflicts: Vec<String> = first
                    .labels
                    .iter()
                    .filter(|(id, label)| second.labels[*id] != **label)
                    .map(|(id, _)| id.clone())
                    .collect();
                if !conflicts.is_empty() {
                    return Err(ApiError::Conflict {
                        message: format!("{} and {} disagree on {} items", first.annotator, second.annotator, conflicts.len()),
                        conflicts,
                    });
                }
                Ok(first.labels.clone())
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CorpusInfo {
    pub name: String,
    pub documents: usize,
    pub gold_labeled: usize,
}
