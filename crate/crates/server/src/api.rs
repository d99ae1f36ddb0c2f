//! The `/v1` HTTP surface. Bodies are JSON; engine calls run on the
//! blocking pool because a live backend does blocking network I/O.

use std::sync::Arc;

use axum::extract::rejection::JsonRejection;
use axum::extract::{Path, State};
use axum::http::{header, HeaderValue, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use reasonchat::nl::NlError;
use reasonchat::session::TranscriptEntry;
use reasonchat::{Engine, EngineError};
use serde::{Deserialize, Serialize};
use serde_json::json;
use tower_http::cors::CorsLayer;

/// Suggested wait when the backend gave none.
const DEFAULT_RETRY_AFTER: u64 = 5;

#[derive(Debug)]
pub struct ApiError {
    status: StatusCode,
    code: &'static str,
    message: String,
    retry_after: Option<u64>,
}

impl ApiError {
    fn new(status: StatusCode, code: &'static str, message: impl Into<String>) -> Self {
        Self { status, code, message: message.into(), retry_after: None }
    }
}

impl From<EngineError> for ApiError {
    fn from(e: EngineError) -> Self {
        let message = e.to_string();
        match e {
            EngineError::BadTask(_) => Self::new(StatusCode::BAD_REQUEST, "BAD_TASK", message),
            EngineError::Invalid(_) => Self::new(StatusCode::BAD_REQUEST, "INVALID", message),
            EngineError::UnknownSession(_) => Self::new(StatusCode::NOT_FOUND, "UNKNOWN_SESSION", message),
            EngineError::StateClosed => Self::new(StatusCode::CONFLICT, "STATE_CLOSED", message),
            EngineError::Backend(NlError::BackendUnavailable { retry_after, .. }) => Self {
                retry_after: Some(retry_after.unwrap_or(DEFAULT_RETRY_AFTER)),
                ..Self::new(StatusCode::SERVICE_UNAVAILABLE, "BACKEND_UNAVAILABLE", message)
            },
            EngineError::Backend(NlError::Timeout) => Self {
                retry_after: Some(DEFAULT_RETRY_AFTER),
                ..Self::new(StatusCode::SERVICE_UNAVAILABLE, "BACKEND_TIMEOUT", message)
            },
            EngineError::Backend(NlError::UnparseableOutput { .. }) => {
                Self::new(StatusCode::UNPROCESSABLE_ENTITY, "UNPARSEABLE_OUTPUT", message)
            }
            EngineError::Backend(NlError::Config(_)) => {
                Self::new(StatusCode::INTERNAL_SERVER_ERROR, "BACKEND_CONFIG", message)
            }
            EngineError::Persist(_) | EngineError::Data(_) => {
                Self::new(StatusCode::INTERNAL_SERVER_ERROR, "INTERNAL", message)
            }
        }
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        let body = Json(json!({ "error": { "code": self.code, "message": self.message } }));
        let mut resp = (self.status, body).into_response();
        if let Some(secs) = self.retry_after {
            resp.headers_mut().insert(header::RETRY_AFTER, HeaderValue::from(secs));
        }
        resp
    }
}

impl From<JsonRejection> for ApiError {
    fn from(r: JsonRejection) -> Self {
        Self::new(r.status(), "INVALID", r.body_text())
    }
}

type ApiResult<T> = Result<T, ApiError>;

async fn blocking<T, F>(engine: &Arc<Engine>, f: F) -> ApiResult<T>
where
    F: FnOnce(&Engine) -> Result<T, EngineError> + Send + 'static,
    T: Send + 'static,
{
    let engine = engine.clone();
    tokio::task::spawn_blocking(move || f(&engine))
        .await
        .map_err(|e| ApiError::new(StatusCode::INTERNAL_SERVER_ERROR, "INTERNAL", e.to_string()))?
        .map_err(ApiError::from)
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CreateSession {
    pub task: String,
    #[serde(default = "mock")]
    pub backend: String,
    #[serde(default)]
    pub seed: Option<u64>,
}

fn mock() -> String {
    "mock".into()
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PostMessage {
    pub text: String,
    /// Skips the understand step when present.
    #[serde(default)]
    pub predicates: Option<String>,
}

#[derive(Debug, Serialize)]
pub struct Transcript {
    pub id: String,
    pub entries: Vec<TranscriptEntry>,
}

async fn health(State(engine): State<Arc<Engine>>) -> impl IntoResponse {
    Json(json!({
        "status": "ok",
        "version": env!("CARGO_PKG_VERSION"),
        "sessions": engine.session_ids().len(),
    }))
}

async fn create_session(
    State(engine): State<Arc<Engine>>,
    body: Result<Json<CreateSession>, JsonRejection>,
) -> ApiResult<Response> {
    let Json(req) = body?;
    let info = blocking(&engine, move |e| e.create_session(&req.task, &req.backend, req.seed)).await?;
    Ok((StatusCode::CREATED, Json(info)).into_response())
}

async fn get_session(State(engine): State<Arc<Engine>>, Path(id): Path<String>) -> ApiResult<Response> {
    Ok(Json(blocking(&engine, move |e| e.info(&id)).await?).into_response())
}

async fn post_message(
    State(engine): State<Arc<Engine>>,
    Path(id): Path<String>,
    body: Result<Json<PostMessage>, JsonRejection>,
) -> ApiResult<Response> {
    let Json(req) = body?;
    if req.text.trim().is_empty() && req.predicates.is_none() {
        return Err(ApiError::new(StatusCode::BAD_REQUEST, "INVALID", "message text is empty"));
    }
    let resp = blocking(&engine, move |e| match &req.predicates {
        Some(p) => e.post_predicates(&id, &req.text, p),
        None => e.post_message(&id, &req.text),
    })
    .await?;
    Ok(Json(resp).into_response())
}

async fn transcript(State(engine): State<Arc<Engine>>, Path(id): Path<String>) -> ApiResult<Response> {
    let entries = blocking(&engine, {
        let id = id.clone();
        move |e| e.transcript(&id)
    })
    .await?;
    Ok(Json(Transcript { id, entries }).into_response())
}

async fn state(State(engine): State<Arc<Engine>>, Path(id): Path<String>) -> ApiResult<Response> {
    Ok(Json(blocking(&engine, move |e| e.state_view(&id)).await?).into_response())
}

async fn not_found() -> ApiError {
    ApiError::new(StatusCode::NOT_FOUND, "NOT_FOUND", "no such route")
}

pub fn router(engine: Arc<Engine>) -> Router {
    Router::new()
        .route("/v1/health", get(health))
        .route("/v1/sessions", post(create_session))
        .route("/v1/sessions/{id}", get(get_session))
        .route("/v1/sessions/{id}/messages", post(post_message))
        .route("/v1/sessions/{id}/transcript", get(transcript))
        .route("/v1/sessions/{id}/state", get(state))
        .fallback(not_found)
        .layer(CorsLayer::permissive())
        .with_state(engine)
}
