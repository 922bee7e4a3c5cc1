use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{origin}:{line}: {message}")]
    MalformedRow {
        origin: String,
        line: usize,
        message: String,
    },

    #[error("duplicate document id `{0}`")]
    DuplicateId(String),

    #[error("source labels without a mapping entry: {}", .0.join(", "))]
    UnmappedLabels(Vec<String>),

    #[error("{what}: missing ids {}", format_ids(.ids))]
    MissingIds { what: String, ids: Vec<String> },

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("degenerate training set: both classes need at least one example")]
    DegenerateTrainingSet,

    #[error("probability for `{id}` out of [0, 1]: {value}")]
    ProbabilityOutOfRange { id: String, value: f64 },

    #[error("label ids do not match the pending batch (missing: [{}], extra: [{}])", .missing.join(", "), .extra.join(", "))]
    LabelSetMismatch {
        missing: Vec<String>,
        extra: Vec<String>,
    },

    #[error("invalid session state: {0}")]
    InvalidState(String),

    #[error("checkpoint version mismatch: file has `{found}`, this build reads `{expected}`")]
    VersionMismatch { expected: String, found: String },

    #[error("pool digest mismatch: checkpoint expects {expected}, pool hashes to {found}")]
    DigestMismatch { expected: String, found: String },

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidInput(msg.into())
    }
}

/// Lists at most ten ids, with a count of the remainder.
fn format_ids(ids: &[String]) -> String {
    const SHOWN: usize = 10;
    let mut out = ids.iter().take(SHOWN).cloned().collect::<Vec<_>>().join(", ");
    if ids.len() > SHOWN {
        out.push_str(&format!(" (and {} more)", ids.len() - SHOWN));
    }
    out
}
