use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::Json;
use serde_json::json;

use crisis_al_core::Error as CoreError;

/// Error returned by every handler; rendered as `{"error": ..., "status": ...}`.
#[derive(Debug, thiserror::Error)]
pub enum ApiError {
    #[error("{0}")]
    BadRequest(String),
    #[error("{0}")]
    NotFound(String),
    #[error("{message}")]
    Conflict {
        message: String,
        /// Items two annotators labeled differently.
        conflicts: Vec<String>,
    },
    #[error("{0}")]
    Unprocessable(String),
    #[error("{0}")]
    Internal(String),
}

impl ApiError {
    pub fn conflict(message: impl Into<String>) -> Self {
        ApiError::Conflict {
            message: message.into(),
            conflicts: Vec::new(),
        }
    }

    pub fn status(&self) -> StatusCode {
        match self {
            ApiError::BadRequest(_) => StatusCode::BAD_REQUEST,
            ApiError::NotFound(_) => StatusCode::NOT_FOUND,
            ApiError::Conflict { .. } => StatusCode::CONFLICT,
            ApiError::Unprocessable(_) => StatusCode::UNPROCESSABLE_ENTITY,
            ApiError::Internal(_) => StatusCode::INTERNAL_SERVER_ERROR,
        }
    }
}

impl From<CoreError> for ApiError {
    fn from(err: CoreError) -> Self {
        let message = err.to_string();
        match err {
            CoreError::LabelSetMismatch { .. } | CoreError::InvalidState(_) => ApiError::conflict(message),
            CoreError::InvalidInput(_) | CoreError::MalformedRow { .. } | CoreError::DuplicateId(_) | CoreError::Json(_) => {
                ApiError::BadRequest(message)
            }
            CoreError::Io { .. } | CoreError::VersionMismatch { .. } | CoreError::DigestMismatch { .. } => {
                ApiError::Internal(message)
            }
            _ => ApiError::Unprocessable(message),
        }
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        let status = self.status();
        if status.is_server_error() {
            tracing::error!(error = %self, "request failed");
        }
        let mut body = json!({ "error": self.to_string(), "status": status.as_u16() });
        if let ApiError::Conflict { conflicts, .. } = &self {
            if !conflicts.is_empty() {
                body["conflicts"] = json!(conflicts);
            }
        }
        (status, Json(body)).into_response()
    }
}

pub type ApiResult<T> = Result<T, ApiError>;

/// Failures outside request handling: opening the store, binding, serving.
#[derive(Debug, thiserror::Error)]
pub enum ServiceError {
    #[error("{path}: {source}")]
    Io {
        path: std::path::PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("invalid bind address `{0}`")]
    BadAddress(String),
}
