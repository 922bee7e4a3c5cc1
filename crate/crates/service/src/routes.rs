use std::sync::Arc;

use axum::body::Bytes;
use axum::extract::rejection::JsonRejection;
use axum::extract::{Path, State};
use axum::http::{header, StatusCode};
use axum::response::IntoResponse;
use axum::routing::{get, post, put};
use axum::{Json, Router};
use serde_json::Value;

use crisis_al_core::engine::{Phase, RoundMetrics};

use crate::api::{AnnotationItem, CorpusInfo, CreateSession, LabelSubmission, SessionHandle, SessionView};
use crate::error::{ApiError, ApiResult};
use crate::openapi;
use crate::store::{SessionEntry, Store};

pub type AppState = Arc<Store>;

pub fn api_router(store: AppState) -> Router {
    Router::new()
        .route("/health", get(health))
        .route("/spec", get(spec))
        .route("/corpora", get(list_corpora))
        .route("/corpora/{name}", put(put_corpus))
        .route("/sessions", post(create_session).get(list_sessions))
        .route("/sessions/{id}", get(get_session))
        .route("/sessions/{id}/batch", get(get_batch))
        .route("/sessions/{id}/labels", post(post_labels))
        .route("/sessions/{id}/metrics", get(get_metrics))
        .route("/sessions/{id}/export", get(get_export))
        .with_state(store)
}

async fn blocking<T: Send + 'static>(f: impl FnOnce() -> ApiResult<T> + Send + 'static) -> ApiResult<T> {
    tokio::task::spawn_blocking(f)
        .await
        .map_err(|e| ApiError::Internal(format!("worker task failed: {e}")))?
}

fn json_body<T>(body: Result<Json<T>, JsonRejection>) -> ApiResult<T> {
    body.map(|Json(v)| v)
        .map_err(|e| ApiError::BadRequest(e.body_text()))
}

async fn health() -> Json<Value> {
    Json(serde_json::json!({ "status": "ok" }))
}

async fn spec() -> Json<Value> {
    Json(openapi::document())
}

async fn list_corpora(State(store): State<AppState>) -> ApiResult<Json<Vec<CorpusInfo>>> {
    blocking(move || store.list_corpora()).await.map(Json)
}

async fn put_corpus(State(store): State<AppState>, Path(name): Path<String>, body: Bytes) -> ApiResult<impl IntoResponse> {
    let info = blocking(move || store.put_corpus(&name, &body)).await?;
    Ok((StatusCode::CREATED, Json(info)))
}

async fn create_session(
    State(store): State<AppState>,
    body: Result<Json<CreateSession>, JsonRejection>,
) -> ApiResult<impl IntoResponse> {
    let request = json_body(body)?;
    let handle = blocking(move || store.create_session(request)).await?;
    Ok((StatusCode::CREATED, Json(handle)))
}

async fn list_sessions(State(store): State<AppState>) -> Json<Vec<SessionHandle>> {
    Json(store.handles())
}

fn view(entry: &SessionEntry) -> SessionView {
    let session = entry.session.read().expect("session lock poisoned");
    let state = session.state();
    SessionView {
        handle: entry.handle(),
        round: state.round,
        labeled_count: state.labeled_count(),
        pending: state.pending_batch.as_ref().map_or(0, |b| b.ids.len()),
        test_size: state.test.len(),
    }
}

async fn get_session(State(store): State<AppState>, Path(id): Path<String>) -> ApiResult<Json<SessionView>> {
    let entry = store.get(&id)?;
    Ok(Json(view(&entry)))
}

async fn get_batch(State(store): State<AppState>, Path(id): Path<String>) -> ApiResult<Json<Vec<AnnotationItem>>> {
    let entry = store.get(&id)?;
    let session = entry.session.read().expect("session lock poisoned");
    let state = session.state();
    let batch = match (state.phase, &state.pending_batch) {
        (Phase::AwaitingLabels, Some(batch)) => batch,
        (phase, _) => return Err(ApiError::conflict(format!("no batch pending: session is {phase}"))),
    };
    let items = batch
        .ids
        .iter()
        .enumerate()
        .map(|(position, doc_id)| {
            let doc = session.pool().get(doc_id).expect("pending ids belong to the pool");
            AnnotationItem {
                doc_id: doc_id.clone(),
                text: doc.text.clone(),
                lang: doc.lang.clone(),
                round: state.round,
                position_in_batch: position,
            }
        })
        .collect();
    Ok(Json(items))
}

async fn post_labels(
    State(store): State<AppState>,
    Path(id): Path<String>,
    body: Result<Json<Value>, JsonRejection>,
) -> ApiResult<Json<RoundMetrics>> {
    let entry = store.get(&id)?;
    let submission = LabelSubmission::parse(json_body(body)?)?;
    let labels = submission.resolve(entry.handle().dual_annotation)?;

    let Ok(_guard) = entry.transition.try_lock() else {
        return Err(ApiError::conflict("another label submission for this session is in progress"));
    };
    // Work on a copy; readers keep seeing the old state until the swap.
    let mut next = entry.snapshot();
    let (next, metrics) = blocking(move || {
        let metrics = next.submit_labels(&labels)?;
        Ok((next, metrics))
    })
    .await?;

    let mut handle = entry.handle();
    handle.status = next.phase();
    // The checkpoint is already on disk and the status is re-derived from it
    // on reload, so a failed handle write is not fatal.
    if let Err(e) = store.write_handle(&handle) {
        tracing::warn!(session = %handle.session_id, error = %e, "could not persist handle");
    }
    *entry.session.write().expect("session lock poisoned") = next;
    *entry.handle.write().expect("handle lock poisoned") = handle;
    Ok(Json(metrics))
}

async fn get_metrics(State(store): State<AppState>, Path(id): Path<String>) -> ApiResult<Json<Vec<RoundMetrics>>> {
    let entry = store.get(&id)?;
    let metrics = entry.session.read().expect("session lock poisoned").metrics();
    Ok(Json(metrics))
}

async fn get_export(State(store): State<AppState>, Path(id): Path<String>) -> ApiResult<impl IntoResponse> {
    let entry = store.get(&id)?;
    let records = entry.session.read().expect("session lock poisoned").labeled_export();
    let mut body = String::new();
    for record in &records {
        body.push_str(&serde_json::to_string(record).map_err(|e| ApiError::Internal(e.to_string()))?);
        body.push('\n');
    }
    Ok(([(header::CONTENT_TYPE, "application/x-ndjson")], body))
}
