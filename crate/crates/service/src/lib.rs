//! HTTP JSON API over active-learning sessions, the backend of the
//! annotation UI.
//!
//! Sessions are independent. Within a session, label submission holds an
//! exclusive transition lock (a second submission gets 409) while reads stay
//! concurrent. Every transition is checkpointed before it becomes visible.

pub mod api;
pub mod error;
mod openapi;
pub mod routes;
pub mod store;

use std::net::SocketAddr;
use std::path::PathBuf;
use std::sync::Arc;

use axum::Router;
use tower_http::cors::{Any, CorsLayer};
use tower_http::services::{ServeDir, ServeFile};

pub use error::{ApiError, ServiceError};
pub use store::Store;

pub const DATA_DIR_ENV: &str = "CRISIS_AL_DATA_DIR";
pub const BIND_ENV: &str = "CRISIS_AL_BIND";
pub const UI_DIR_ENV: &str = "CRISIS_AL_UI_DIR";

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ServiceConfig {
    pub data_dir: PathBuf,
    pub bind: String,
    /// Static UI bundle served at `/`.
    pub ui_dir: Option<PathBuf>,
}

impl Default for ServiceConfig {
    fn default() -> Self {
        ServiceConfig {
            data_dir: PathBuf::from("crisis-al-data"),
            bind: "127.0.0.1:8080".into(),
            ui_dir: None,
        }
    }
}

impl ServiceConfig {
    /// Defaults overridden by `CRISIS_AL_DATA_DIR`, `CRISIS_AL_BIND` and `CRISIS_AL_UI_DIR`.
    pub fn from_env() -> Self {
        let mut config = ServiceConfig::default();
        if let Ok(dir) = std::env::var(DATA_DIR_ENV) {
            config.data_dir = dir.into();
        }
        if let Ok(bind) = std::env::var(BIND_ENV) {
            config.bind = bind;
        }
        if let Ok(dir) = std::env::var(UI_DIR_ENV) {
            config.ui_dir = Some(dir.into());
        }
        config
    }
}

/// The full application: API routes, CORS, and the optional UI bundle.
pub fn app(store: Arc<Store>, ui_dir: Option<PathBuf>) -> Router {
    let cors = CorsLayer::new().allow_origin(Any).allow_methods(Any).allow_headers(Any);
    let router = routes::api_router(store);
    let router = match ui_dir {
        Some(dir) => {
            let index = dir.join("index.html");
            router.fallback_service(ServeDir::new(dir).fallback(ServeFile::new(index)))
        }
        None => router,
    };
    router.layer(cors)
}

/// Opens the store and serves until the process is stopped.
pub async fn serve(config: ServiceConfig) -> Result<(), ServiceError> {
    let addr: SocketAddr = config
        .bind
        .parse()
        .map_err(|_| ServiceError::BadAddress(config.bind.clone()))?;
    let data_dir = config.data_dir.clone();
    let store = tokio::task::spawn_blocking(move || Store::open(data_dir))
        .await
        .expect("store loading task panicked")?;
    let listener = tokio::net::TcpListener::bind(addr)
        .await
        .map_err(|source| ServiceError::Io {
            path: config.bind.clone().into(),
            source,
        })?;
    tracing::info!(%addr, "listening");
    axum::serve(listener, app(Arc::new(store), config.ui_dir))
        .await
        .map_err(|source| ServiceError::Io {
            path: config.bind.into(),
            source,
        })
}
