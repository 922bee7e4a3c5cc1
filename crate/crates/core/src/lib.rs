//! Identification of disaster-related short texts with keyword filters and
//! pool-based active learning.
//!
//! - [`corpus`]: documents, label mapping, pre-filtering, splits
//! - [`filter`]: exact and fuzzy keyword classification
//! - [`features`]: TF-IDF and imported embeddings
//! - [`model`]: logistic classifier and prediction exchange
//! - [`strategies`]: random, LC, PE, BT, greedy core-set and DAL queries
//! - [`engine`]: the labeling session state machine
//! - [`evaluation`]: per-class metrics and method comparison

pub mod corpus;
pub mod engine;
pub mod error;
pub mod evaluation;
pub mod features;
pub mod filter;
pub mod model;
pub mod strategies;
pub mod synthetic;
pub mod tokenize;

pub use corpus::{Document, Label, LabelMapping, LabeledId, Pool};
pub use engine::{RoundMetrics, Session, SessionConfig, SessionState};
pub use error::{Error, Result};
pub use evaluation::{ConfusionMatrix, EvaluationReport};
pub use features::{FeatureMatrix, Vocabulary};
pub use filter::{EditDistanceBudget, KeywordList, MatchMode};
pub use model::{Hyperparams, LinearModel, Prediction};
pub use strategies::{QueryBatch, QueryContext, Strategy};
