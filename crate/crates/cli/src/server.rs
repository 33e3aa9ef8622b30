//! HTTP API for the review UI: the validation queue, labeling, the accuracy
//! monitor, and read access to tracked runs.

use std::net::SocketAddr;
use std::sync::{Arc, Mutex};

use anyhow::{Context, Result};
use axum::body::Bytes;
use axum::extract::{Path, Query, State};
use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use boardsense_core::chess::Placement;
use boardsense_core::pipeline::{
    ItemStatus, MonitorConfig, Pipeline, PipelineError, ValidationItem, Verdict,
};
use boardsense_core::tracking::{RunFilter, RunStatus, Store, TrackingError};
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use tower_http::services::{ServeDir, ServeFile};

use crate::{ServeArgs, EXIT_OK};

pub struct AppState {
    /// All pipeline writes go through this lock.
    pub pipeline: Mutex<Pipeline>,
    pub store: Store,
    pub monitor: MonitorConfig,
}

#[derive(Debug)]
pub struct ApiError {
    status: StatusCode,
    code: &'static str,
    message: String,
}

impl ApiError {
    fn new(status: StatusCode, code: &'static str, message: impl Into<String>) -> ApiError {
        ApiError {
            status,
            code,
            message: message.into(),
        }
    }

    fn bad_request(message: impl Into<String>) -> ApiError {
        ApiError::new(StatusCode::BAD_REQUEST, "bad_request", message)
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        let body = json!({ "code": self.code, "message": self.message });
        (self.status, Json(body)).into_response()
    }
}

impl From<PipelineError> for ApiError {
    fn from(e: PipelineError) -> ApiError {
        let (status, code) = match &e {
            PipelineError::UnknownGame(_) | PipelineError::UnknownItem(_) => {
                (StatusCode::NOT_FOUND, "not_found")
            }
            PipelineError::AlreadyValidated(_) => (StatusCode::CONFLICT, "already_validated"),
            PipelineError::IllegalPlacement(_) => {
                (StatusCode::UNPROCESSABLE_ENTITY, "illegal_placement")
            }
            PipelineError::EmptyCorrection => (StatusCode::UNPROCESSABLE_ENTITY, "empty_correction"),
            PipelineError::NoValidatedItems => (StatusCode::CONFLICT, "no_validated_items"),
            PipelineError::InvalidConfig(_) => (StatusCode::BAD_REQUEST, "invalid_config"),
            _ => (StatusCode::INTERNAL_SERVER_ERROR, "internal"),
        };
        ApiError::new(status, code, e.to_string())
    }
}

impl From<TrackingError> for ApiError {
    fn from(e: TrackingError) -> ApiError {
        let (status, code) = match &e {
            TrackingError::UnknownRun(_) => (StatusCode::NOT_FOUND, "not_found"),
            TrackingError::InvalidName(_) => (StatusCode::BAD_REQUEST, "invalid_name"),
            _ => (StatusCode::INTERNAL_SERVER_ERROR, "internal"),
        };
        ApiError::new(status, code, e.to_string())
    }
}

type ApiResult<T> = Result<Json<T>, ApiError>;

#[derive(Serialize)]
struct ItemView<'a> {
    #[serde(flatten)]
    item: &'a ValidationItem,
    correct: Option<bool>,
}

fn item_json(item: &ValidationItem) -> Value {
    serde_json::to_value(ItemView {
        item,
        correct: item.correct(),
    })
    .expect("items serialize")
}

fn lock(state: &AppState) -> std::sync::MutexGuard<'_, Pipeline> {
    // a panicked handler cannot leave the pipeline half-written: every
    // mutation is a single journal append
    state.pipeline.lock().unwrap_or_else(|p| p.into_inner())
}

#[derive(Deserialize)]
struct ListQuery {
    status: Option<String>,
}

async fn list_validations(
    State(state): State<Arc<AppState>>,
    Query(q): Query<ListQuery>,
) -> ApiResult<Vec<Value>> {
    let status = q
        .status
        .map(|s| s.parse::<ItemStatus>())
        .transpose()
        .map_err(ApiError::bad_request)?;
    let pipeline = lock(&state);
    Ok(Json(pipeline.items(status).into_iter().map(item_json).collect()))
}

async fn get_validation(
    State(state): State<Arc<AppState>>,
    Path(id): Path<String>,
) -> ApiResult<Value> {
    let pipeline = lock(&state);
    let item = pipeline
        .item(&id)
        .ok_or_else(|| ApiError::from(PipelineError::UnknownItem(id.clone())))?;
    let observation = pipeline.observation(item)?;
    let mut body = item_json(item);
    body["observation"] = serde_json::to_value(&observation).expect("observations serialize");
    Ok(Json(body))
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct VerdictBody {
    verdict: String,
    placement: Option<String>,
    note: Option<String>,
}

async fn submit_validation(
    State(state): State<Arc<AppState>>,
    Path(id): Path<String>,
    body: Bytes,
) -> ApiResult<Value> {
    let body: VerdictBody = serde_json::from_slice(&body)
        .map_err(|e| ApiError::bad_request(format!("invalid body: {e}")))?;
    let verdict = match body.verdict.to_ascii_lowercase().as_str() {
        "accepted" | "accept" => {
            if body.placement.is_some() {
                return Err(ApiError::bad_request("an accepted verdict takes no placement"));
            }
            Verdict::Accepted
        }
        "corrected" | "correct" => {
            let text = body
                .placement
                .ok_or_else(|| ApiError::bad_request("a correction needs a placement"))?;
            let placement = Placement::from_fen_field(&text)
                .map_err(|e| ApiError::from(PipelineError::IllegalPlacement(e)))?;
            Verdict::Corrected {
                placement,
                note: body.note,
            }
        }
        other => {
            return Err(ApiError::bad_request(format!(
                "verdict must be accepted or corrected, got {other:?}"
            )))
        }
    };
    let mut pipeline = lock(&state);
    let item = pipeline.submit_validation(&id, verdict)?;
    Ok(Json(item_json(&item)))
}

async fn run_labeling(State(state): State<Arc<AppState>>) -> ApiResult<Value> {
    let pipeline = lock(&state);
    let summary = pipeline.run_labeling_job()?;
    Ok(Json(serde_json::to_value(summary).expect("summary serializes")))
}

async fn monitor_status(State(state): State<Arc<AppState>>) -> ApiResult<Value> {
    let pipeline = lock(&state);
    let status = pipeline.monitor_status(&state.monitor)?;
    Ok(Json(serde_json::to_value(status).expect("status serializes")))
}

#[derive(Deserialize)]
struct RunQuery {
    status: Option<String>,
}

async fn list_runs(
    State(state): State<Arc<AppState>>,
    Query(q): Query<RunQuery>,
) -> ApiResult<Value> {
    let mut filter = RunFilter::default();
    if let Some(s) = q.status {
        let status: RunStatus = serde_json::from_value(Value::String(s.clone()))
            .map_err(|_| ApiError::bad_request(format!("unknown run status {s:?}")))?;
        filter.status = Some(status);
    }
    let runs = state.store.query_runs(&filter)?;
    Ok(Json(serde_json::to_value(runs).expect("runs serialize")))
}

async fn metric_series(
    State(state): State<Arc<AppState>>,
    Path((id, key)): Path<(String, String)>,
) -> ApiResult<Value> {
    let series = state.store.metric_series(&id, &key)?;
    Ok(Json(json!({ "run_id": id, "key": key, "series": series })))
}

async fn not_found() -> ApiError {
    ApiError::new(StatusCode::NOT_FOUND, "not_found", "no such endpoint")
}

/// The API routes, plus the UI assets when `ui_dir` exists.
pub fn router(state: Arc<AppState>, ui_dir: Option<&std::path::Path>) -> Router {
    let api = Router::new()
        .route("/validations", get(list_validations))
        .route("/validations/{id}", get(get_validation).post(submit_validation))
        .route("/labeling/run", post(run_labeling))
        .route("/monitor/status", get(monitor_status))
        .route("/runs", get(list_runs))
        .route("/runs/{id}/metrics/{key}", get(metric_series))
        .fallback(not_found)
        .with_state(state);
    let app = Router::new().nest("/api", api);
    match ui_dir {
        Some(dir) if dir.is_dir() => {
            let index = dir.join("index.html");
            app.fallback_service(ServeDir::new(dir).fallback(ServeFile::new(index)))
        }
        _ => app,
    }
}

pub fn serve(args: ServeArgs) -> Result<u8> {
    let config = args.monitor.config();
    config.validate()?;
    let state = Arc::new(AppState {
        pipeline: Mutex::new(Pipeline::open(&args.pipeline)?),
        store: Store::open(&args.store)?,
        monitor: config,
    });
    let app = router(state, Some(&args.ui));
    let addr: SocketAddr = format!("{}:{}", args.host, args.port)
        .parse()
        .with_context(|| format!("bad address {}:{}", args.host, args.port))?;
    let runtime = tokio::runtime::Runtime::new()?;
    runtime.block_on(async move {
        let listener = tokio::net::TcpListener::bind(addr)
            .await
            .with_context(|| format!("binding {addr}"))?;
        eprintln!("serving on http://{}", listener.local_addr()?);
        axum::serve(listener, app)
            .with_graceful_shutdown(async {
                let _ = tokio::signal::ctrl_c().await;
            })
            .await?;
        anyhow::Ok(())
    })?;
    Ok(EXIT_OK)
}
