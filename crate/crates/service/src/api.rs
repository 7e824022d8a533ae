//! JSON-over-HTTP routes. Schemas are documented in `docs/formats.md`.
//!
//! Handlers run service calls on the blocking pool: writes fsync and remote
//! encoders block. Adjudications additionally hold one of a fixed number of
//! slots.

use std::future::Future;
use std::path::PathBuf;
use std::sync::Arc;

use axum::body::Bytes;
use axum::extract::{Path, Request, State};
use axum::http::{header, StatusCode};
use axum::middleware::{self, Next};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::Value;
use tokio::sync::Semaphore;
use tower_http::services::ServeDir;

use jarvis_core::model::{BehaviorRecord, Review};
use jarvis_core::pipeline::IngestOutcome;

use crate::error::ApiError;
use crate::state::{unix_now, DecisionInput, Service};

#[derive(Debug, Clone, Default)]
pub struct ApiOptions {
    /// When set, every API route requires `Authorization: Bearer <token>`.
    pub bearer_token: Option<String>,
    /// Directory of built console assets, served under `/console`.
    pub console_dir: Option<PathBuf>,
}

#[derive(Clone)]
pub struct AppState {
    svc: Arc<Service>,
    slots: Arc<Semaphore>,
    token: Option<Arc<str>>,
}

type ApiResult<T> = Result<T, ApiError>;

fn parse<T: DeserializeOwned>(body: &[u8]) -> ApiResult<T> {
    serde_json::from_slice(body).map_err(|e| ApiError::bad_body(e.to_string()))
}

async fn blocking<T, F>(f: F) -> ApiResult<T>
where
    F: FnOnce() -> jarvis_core::Result<T> + Send + 'static,
    T: Send + 'static,
{
    tokio::task::spawn_blocking(f)
        .await
        .map_err(|e| ApiError::new(StatusCode::INTERNAL_SERVER_ERROR, "internal", e.to_string()))?
        .map_err(ApiError::from)
}

pub fn router(svc: Arc<Service>, opts: &ApiOptions) -> Router {
    let state = AppState {
        slots: Arc::new(Semaphore::new(svc.config().adjudication_slots)),
        token: opts.bearer_token.as_deref().map(Arc::from),
        svc,
    };
    let api = Router::new()
        .route("/reviews", post(post_review))
        .route("/behaviors", post(post_behaviors))
        .route("/adjudications", post(post_adjudication))
        .route("/cases", get(list_cases))
        .route("/cases/{id}", get(get_case))
        .route("/cases/{id}/graph", get(get_graph))
        .route("/cases/{id}/decision", post(post_decision))
        .route("/metrics/adoption", get(get_adoption))
        .route_layer(middleware::from_fn_with_state(state.clone(), require_token));

    let console = match &opts.console_dir {
        Some(dir) if dir.is_dir() => Router::new().nest_service("/console", ServeDir::new(dir)),
        _ => Router::new()
            .route("/console", get(console_missing))
            .route("/console/{*rest}", get(console_missing)),
    };

    Router::new()
        .route("/health", get(health))
        .merge(api)
        .merge(console)
        .fallback(not_found)
        .with_state(state)
}

/// Serves until `shutdown` resolves, retrying queued embeddings every
/// `retry_every`.
pub async fn serve(
    listener: tokio::net::TcpListener,
    svc: Arc<Service>,
    opts: ApiOptions,
    shutdown: impl Future<Output = ()> + Send + 'static,
) -> std::io::Result<()> {
    let retry = {
        let svc = Arc::clone(&svc);
        tokio::spawn(async move {
            let mut tick = tokio::time::interval(std::time::Duration::from_secs(5));
            loop {
                tick.tick().await;
                let svc = Arc::clone(&svc);
                if !svc.pending().is_empty() {
                    let done = tokio::task::spawn_blocking(move || svc.retry_pending())
                        .await
                        .unwrap_or(0);
                    if done > 0 {
                        tracing::info!(done, "indexed queued embeddings");
                    }
                }
            }
        })
    };
    let app = router(svc, &opts);
    let result = axum::serve(listener, app).with_graceful_shutdown(shutdown).await;
    retry.abort();
    result
}

async fn require_token(State(state): State<AppState>, req: Request, next: Next) -> Response {
    if let Some(token) = &state.token {
        let ok = req
            .headers()
            .get(header::AUTHORIZATION)
            .and_then(|v| v.to_str().ok())
            .and_then(|v| v.strip_prefix("Bearer "))
            .is_some_and(|t| t == &**token);
        if !ok {
            return ApiError::unauthorized().into_response();
        }
    }
    next.run(req).await
}

async fn health(State(state): State<AppState>) -> ApiResult<Json<Value>> {
    let stats = blocking(move || Ok(state.svc.stats())).await?;
    Ok(Json(serde_json::json!({ "status": "ok", "stats": stats })))
}

#[derive(Debug, Serialize, Deserialize)]
pub struct IngestResponse {
    pub review_id: String,
    pub outcome: IngestOutcome,
    pub indexed: bool,
}

async fn post_review(State(state): State<AppState>, body: Bytes) -> ApiResult<Response> {
    let review: Review = parse(&body)?;
    let report = blocking(move || state.svc.ingest(&review, unix_now())).await?;
    let status = match report.outcome {
        IngestOutcome::Created => StatusCode::CREATED,
        IngestOutcome::Unchanged => StatusCode::OK,
    };
    let body = IngestResponse {
        review_id: report.review_id,
        outcome: report.outcome,
        indexed: report.indexed,
    };
    Ok((status, Json(body)).into_response())
}

#[derive(Debug, Serialize, Deserialize)]
pub struct BehaviorsResponse {
    pub added: usize,
    pub duplicates: usize,
}

/// Accepts one record or an array of records.
async fn post_behaviors(State(state): State<AppState>, body: Bytes) -> ApiResult<Response> {
    let value: Value = parse(&body)?;
    let records: Vec<BehaviorRecord> = if value.is_array() {
        serde_json::from_value(value)
    } else {
        serde_json::from_value(value).map(|b| vec![b])
    }
    .map_err(|e| ApiError::bad_body(e.to_string()))?;
    let total = records.len();
    let added = blocking(move || state.svc.add_behaviors(records)).await?;
    let status = if added > 0 { StatusCode::CREATED } else { StatusCode::OK };
    Ok((
        status,
        Json(BehaviorsResponse {
            added,
            duplicates: total - added,
        }),
    )
        .into_response())
}

#[derive(Debug, Serialize, Deserialize)]
pub struct AdjudicationRequest {
    pub review_id: String,
}

async fn post_adjudication(State(state): State<AppState>, body: Bytes) -> ApiResult<Response> {
    let req: AdjudicationRequest = parse(&body)?;
    let _slot = Arc::clone(&state.slots)
        .acquire_owned()
        .await
        .map_err(|e| ApiError::new(StatusCode::SERVICE_UNAVAILABLE, "shutting_down", e.to_string()))?;
    let case = blocking(move || state.svc.adjudicate(&req.review_id, unix_now())).await?;
    Ok((StatusCode::CREATED, Json(case)).into_response())
}

async fn list_cases(State(state): State<AppState>) -> ApiResult<Response> {
    let cases = blocking(move || Ok(state.svc.case_summaries())).await?;
    Ok(Json(cases).into_response())
}

async fn get_case(State(state): State<AppState>, Path(id): Path<String>) -> ApiResult<Response> {
    let case = blocking(move || state.svc.case(&id)).await?;
    Ok(Json(case).into_response())
}

async fn get_graph(State(state): State<AppState>, Path(id): Path<String>) -> ApiResult<Response> {
    let case = blocking(move || state.svc.case(&id)).await?;
    Ok(Json(case.graph).into_response())
}

/// Wire form of a decision; the enum is checked here so a bad value is a
/// field-level validation error.
#[derive(Debug, Deserialize)]
struct DecisionBody {
    decision: String,
    #[serde(default)]
    note: Option<String>,
    auditor_id: String,
    #[serde(default)]
    decided_at: Option<i64>,
}

async fn post_decision(State(state): State<AppState>, Path(id): Path<String>, body: Bytes) -> ApiResult<Response> {
    let body: DecisionBody = parse(&body)?;
    let input = DecisionInput {
        decision: body.decision.parse()?,
        note: body.note,
        auditor_id: body.auditor_id,
        decided_at: body.decided_at,
    };
    let outcome = blocking(move || state.svc.decide(&id, input, unix_now())).await?;
    Ok(Json(outcome).into_response())
}

async fn get_adoption(State(state): State<AppState>) -> ApiResult<Response> {
    let report = blocking(move || Ok(state.svc.adoption())).await?;
    Ok(Json(report).into_response())
}

async fn console_missing() -> ApiError {
    ApiError::new(
        StatusCode::NOT_FOUND,
        "console_not_built",
        "console assets are not installed; start the service with --console-dir",
    )
}

async fn not_found() -> ApiError {
    ApiError::new(StatusCode::NOT_FOUND, "not_found", "no such route")
}
