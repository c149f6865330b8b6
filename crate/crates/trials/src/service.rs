use std::sync::Arc;

use axum::body::Body;
use axum::extract::{Path, Query, State};
use axum::http::{header, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use serde::Deserialize;
use serde_json::json;
use tower_http::cors::CorsLayer;

use crate::error::TrialError;
use crate::store::{ResponseSubmission, SessionFilter, SessionRequest, TrialStore};

pub type AppState = Arc<TrialStore>;

impl IntoResponse for TrialError {
    fn into_response(self) -> Response {
        let status = match &self {
            TrialError::UnknownSession(_) | TrialError::UnknownImage(_) => StatusCode::NOT_FOUND,
            TrialError::Conflict(_) => StatusCode::CONFLICT,
            TrialError::Validation(_) => StatusCode::BAD_REQUEST,
            TrialError::Io { .. } | TrialError::Log { .. } => {
                log::error!("{self}");
                StatusCode::INTERNAL_SERVER_ERROR
            }
        };
        (status, Json(json!({ "error": self.to_string() }))).into_response()
    }
}

/// HTTP routes of the trial service.
pub fn router(store: AppState) -> Router {
    Router::new()
        .route("/config", get(config))
        .route("/sessions", post(create_session))
        .route("/sessions/{id}", get(session))
        .route("/sessions/{id}/next", get(next))
        .route("/sessions/{id}/responses", post(respond))
        .route("/images/{image_id}", get(image))
        .route("/export", get(export))
        .layer(CorsLayer::permissive())
        .with_state(store)
}

async fn blocking<T: Send + 'static>(
    f: impl FnOnce() -> Result<T, TrialError> + Send + 'static,
) -> Result<T, TrialError> {
    tokio::task::spawn_blocking(f)
        .await
        .unwrap_or_else(|e| Err(TrialError::io("<worker>", std::io::Error::other(e))))
}

async fn config(State(store): State<AppState>) -> impl IntoResponse {
    Json(json!({
        "exposures_ms": store.config().exposures_ms,
        "mask": store.config().mask,
        "choices": store.classes(),
    }))
}

async fn create_session(
    State(store): State<AppState>,
    Json(request): Json<SessionRequest>,
) -> Result<impl IntoResponse, TrialError> {
    let session = blocking(move || store.create_session(&request)).await?;
    Ok((
        StatusCode::CREATED,
        Json(json!({
            "session_id": session.session_id,
            "exposure_ms": session.exposure_ms,
            "length": session.order.len(),
            "seed": session.seed,
        })),
    ))
}

async fn session(
    State(store): State<AppState>,
    Path(id): Path<String>,
) -> Result<impl IntoResponse, TrialError> {
    let s = store.session(&id)?;
    Ok(Json(json!({
        "session_id": s.session_id,
        "exposure_ms": s.exposure_ms,
        "length": s.order.len(),
        "cursor": s.cursor,
        "created_at": s.created_at,
    })))
}

async fn next(
    State(store): State<AppState>,
    Path(id): Path<String>,
) -> Result<impl IntoResponse, TrialError> {
    Ok(Json(store.next_stimulus(&id)?))
}

async fn respond(
    State(store): State<AppState>,
    Path(id): Path<String>,
    Json(submission): Json<ResponseSubmission>,
) -> Result<impl IntoResponse, TrialError> {
    let ack = blocking(move || store.record_response(&id, &submission)).await?;
    Ok(Json(ack))
}

async fn image(State(store): State<AppState>, Path(image_id): Path<String>) -> Result<Response, TrialError> {
    let record = store
        .manifest()
        .get(&image_id)
        .ok_or_else(|| TrialError::UnknownImage(image_id.clone()))?;
    let path = store.manifest().image_path(record);
    let bytes = tokio::fs::read(&path)
        .await
        .map_err(|e| TrialError::io(&path, e))?;
    Ok((
        [
            (header::CONTENT_TYPE, "image/png"),
            (header::CACHE_CONTROL, "no-store"),
        ],
        Body::from(bytes),
    )
        .into_response())
}

#[derive(Debug, Deserialize)]
struct ExportQuery {
    /// Comma-separated session ids; absent means every session.
    session: Option<String>,
}

async fn export(State(store): State<AppState>, Query(q): Query<ExportQuery>) -> impl IntoResponse {
    let filter = match q.session {
        None => SessionFilter::All,
        Some(ids) => SessionFilter::Ids(
            ids.split(',')
                .map(str::trim)
                .filter(|s| !s.is_empty())
                .map(String::from)
                .collect(),
        ),
    };
    (
        [(header::CONTENT_TYPE, "text/csv")],
        store.export_human_predictions(&filter),
    )
}

/// Serves [`router`] on `listener` until `shutdown` resolves.
pub async fn serve(
    listener: tokio::net::TcpListener,
    store: AppState,
    shutdown: impl std::future::Future<Output = ()> + Send + 'static,
) -> std::io::Result<()> {
    axum::serve(listener, router(store))
        .with_graceful_shutdown(shutdown)
        .await
}
