//! HTTP/JSON front end over a semscope workspace.
//!
//! `POST /runs` executes the pipeline (one run at a time) and stores the
//! snapshot; every other route reads stored snapshots without recomputation.

use std::collections::BTreeMap;
use std::net::SocketAddr;
use std::sync::Arc;

use axum::extract::{Path, Query, State};
use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use tokio::net::TcpListener;
use tokio::sync::Mutex;

use semscope_core::pipeline::{run_pipeline_logged, snapshot_id};
use semscope_core::store::{SnapshotMeta, Workspace};
use semscope_core::{Corpus, Error, PipelineConfig};

pub const DEFAULT_ADDR: &str = "127.0.0.1:7878";

pub struct AppState {
    workspace: Workspace,
    run_lock: Mutex<()>,
}

impl AppState {
    pub fn new(workspace: Workspace) -> Arc<Self> {
        Arc::new(Self {
            workspace,
            run_lock: Mutex::new(()),
        })
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunRequest {
    /// Inline corpus document.
    #[serde(default)]
    pub corpus: Option<Value>,
    /// Name of a corpus already ingested into the workspace.
    #[serde(default)]
    pub corpus_name: Option<String>,
    #[serde(default)]
    pub config: Option<PipelineConfig>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunResponse {
    pub snapshot_id: String,
    /// False when an identical run was already stored.
    pub created: bool,
    pub meta: SnapshotMeta,
}

pub struct ApiError(StatusCode, Value);

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        (self.0, Json(self.1)).into_response()
    }
}

impl From<Error> for ApiError {
    fn from(e: Error) -> Self {
        let message = e.to_string();
        let (status, kind) = match &e {
            Error::SnapshotNotFound(_) => (StatusCode::NOT_FOUND, "snapshot_not_found"),
            Error::UnknownResource(_) => (StatusCode::NOT_FOUND, "unknown_resource"),
            Error::UnknownKeyword { .. } => (StatusCode::NOT_FOUND, "unknown_keyword"),
            Error::InvalidParameter(_) => (StatusCode::BAD_REQUEST, "invalid_parameter"),
            Error::Malformed { .. }
            | Error::DuplicateIds(_)
            | Error::NoArticles
            | Error::InvalidCorpus(_)
            | Error::Json(_) => (StatusCode::UNPROCESSABLE_ENTITY, "invalid_input"),
            _ => (StatusCode::INTERNAL_SERVER_ERROR, "internal"),
        };
        let mut body = json!({"error": message, "kind": kind});
        if let Error::UnknownKeyword { suggestions, .. } = &e {
            body["suggestions"] = json!(suggestions);
        }
        ApiError(status, body)
    }
}

fn bad_request(message: impl Into<String>) -> ApiError {
    ApiError(
        StatusCode::BAD_REQUEST,
        json!({"error": message.into(), "kind": "invalid_parameter"}),
    )
}

async fn blocking<T: Send + 'static>(f: impl FnOnce() -> Result<T, Error> + Send + 'static) -> Result<T, ApiError> {
    tokio::task::spawn_blocking(f).await.map_err(|e| {
        ApiError(
            StatusCode::INTERNAL_SERVER_ERROR,
            json!({"error": e.to_string(), "kind": "internal"}),
        )
    })?
    .map_err(ApiError::from)
}

async fn health() -> Json<Value> {
    Json(json!({"status": "ok"}))
}

async fn list_snapshots(State(state): State<Arc<AppState>>) -> Result<Json<Value>, ApiError> {
    let ws = state.workspace.clone();
    let list = blocking(move || ws.list_snapshots()).await?;
    Ok(Json(json!({"snapshots": list})))
}

async fn create_run(
    State(state): State<Arc<AppState>>,
    Json(request): Json<RunRequest>,
) -> Result<(StatusCode, Json<RunResponse>), ApiError> {
    let config = request.config.unwrap_or_default();
    config.validate()?;
    let ws = state.workspace.clone();
    let corpus = match (request.corpus, request.corpus_name) {
        (Some(doc), None) => blocking(move || Corpus::from_json(&doc.to_string())).await?,
        (None, Some(name)) => {
            if name.is_empty() || !name.chars().all(|c| c.is_ascii_alphanumeric() || "-_.".contains(c)) || name.starts_with('.') {
                return Err(bad_request(format!("invalid corpus name `{name}`")));
            }
            if !ws.corpus_path(&name).is_file() {
                return Err(ApiError(
                    StatusCode::NOT_FOUND,
                    json!({"error": format!("corpus `{name}` not found"), "kind": "corpus_not_found"}),
                ));
            }
            let ws = ws.clone();
            blocking(move || ws.load_corpus(&name)).await?
        }
        _ => return Err(bad_request("provide exactly one of `corpus` or `corpus_name`")),
    };
    let _guard = state.run_lock.lock().await;
    let sid = snapshot_id(&corpus, &config);
    if ws.has_snapshot(&sid) {
        let meta = blocking(move || ws.meta(&sid)).await?;
        return Ok((
            StatusCode::OK,
            Json(RunResponse {
                snapshot_id: meta.snapshot_id.clone(),
                created: false,
                meta,
            }),
        ));
    }
    let meta = blocking(move || {
        let mut log = Vec::new();
        let snapshot = run_pipeline_logged(&corpus, &config, &mut log).inspect_err(|e| {
            tracing::warn!(error = %e, log = ?log, "pipeline run failed");
        })?;
        ws.write_snapshot(&snapshot)
    })
    .await?;
    tracing::info!(snapshot_id = %meta.snapshot_id, "snapshot stored");
    Ok((
        StatusCode::CREATED,
        Json(RunResponse {
            snapshot_id: meta.snapshot_id.clone(),
            created: true,
            meta,
        }),
    ))
}

async fn resource(
    State(state): State<Arc<AppState>>,
    Path((sid, resource)): Path<(String, String)>,
    Query(query): Query<BTreeMap<String, String>>,
) -> Result<Json<Value>, ApiError> {
    let ws = state.workspace.clone();
    let value = blocking(move || ws.query(&sid, &resource, &query)).await?;
    Ok(Json(value))
}

async fn not_found() -> ApiError {
    ApiError(
        StatusCode::NOT_FOUND,
        json!({"error": "no such route", "kind": "unknown_resource"}),
    )
}

pub fn router(state: Arc<AppState>) -> Router {
    Router::new()
        .route("/health", get(health))
        .route("/snapshots", get(list_snapshots))
        .route("/runs", post(create_run))
        .route("/{sid}/{*resource}", get(resource))
        .fallback(not_found)
        .with_state(state)
}

/// Serves until `shutdown` resolves.
pub async fn serve(
    listener: TcpListener,
    workspace: Workspace,
    shutdown: impl std::future::Future<Output = ()> + Send + 'static,
) -> std::io::Result<()> {
    let addr: Option<SocketAddr> = listener.local_addr().ok();
    tracing::info!(?addr, root = %workspace.root().display(), "listening");
    axum::serve(listener, router(AppState::new(workspace)))
        .with_graceful_shutdown(shutdown)
        .await
}
