//! HTTP what-if service over an immutable snapshot.
//!
//! Every response body is JSON (`application/json`). Errors carry
//! `{"status", "error", "field"}` with 400 for malformed requests, 404 for
//! unknown resources and 422 when the inputs are well-formed but cannot be
//! served (for example missing panel history).

use std::path::PathBuf;
use std::sync::{Arc, RwLock};

use axum::body::Bytes;
use axum::extract::{Path, Query, State};
use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use serde::{Deserialize, Serialize};

use newscast_core::ErrorClass;

use crate::error::AppError;
use crate::snapshot::{Snapshot, SnapshotMeta};
use crate::whatif::{prediction_vs_actual, topic_volume, topics, whatif_request, WhatIfRequest};

/// Holds the current snapshot. Handlers clone the `Arc` once, so a
/// replacement never affects requests already in flight.
pub struct AppState {
    current: RwLock<Arc<Snapshot>>,
    /// Where to reload from on SIGHUP.
    pub dir: Option<PathBuf>,
}

impl AppState {
    pub fn new(snapshot: Snapshot, dir: Option<PathBuf>) -> Arc<Self> {
        Arc::new(AppState {
            current: RwLock::new(Arc::new(snapshot)),
            dir,
        })
    }

    pub fn current(&self) -> Arc<Snapshot> {
        self.current.read().expect("snapshot lock").clone()
    }

    pub fn replace(&self, snapshot: Snapshot) {
        *self.current.write().expect("snapshot lock") = Arc::new(snapshot);
    }
}

#[derive(Debug, Serialize, Deserialize)]
pub struct ErrorBody {
    pub status: u16,
    pub error: String,
    pub field: Option<String>,
}

pub struct ApiError {
    status: StatusCode,
    body: ErrorBody,
}

impl ApiError {
    fn new(status: StatusCode, error: String, field: Option<String>) -> Self {
        ApiError {
            status,
            body: ErrorBody {
                status: status.as_u16(),
                error,
                field,
            },
        }
    }
}

impl From<AppError> for ApiError {
    fn from(e: AppError) -> Self {
        let status = match e.class() {
            ErrorClass::Input => StatusCode::BAD_REQUEST,
            ErrorClass::Lookup => StatusCode::NOT_FOUND,
            ErrorClass::InsufficientHistory | ErrorClass::Domain => {
                StatusCode::UNPROCESSABLE_ENTITY
            }
            ErrorClass::Io | ErrorClass::Convergence => StatusCode::INTERNAL_SERVER_ERROR,
        };
        let field = match &e {
            AppError::Field { field, .. } => Some(field.to_string()),
            _ => None,
        };
        ApiError::new(status, e.to_string(), field)
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        if self.status.is_server_error() {
            tracing::error!(error = %self.body.error, "request failed");
        }
        (self.status, Json(self.body)).into_response()
    }
}

type ApiResult<T> = Result<Json<T>, ApiError>;

/// Runs CPU-bound work off the async workers.
async fn blocking<T, F>(f: F) -> ApiResult<T>
where
    F: FnOnce() -> Result<T, AppError> + Send + 'static,
    T: Send + 'static,
{
    match tokio::task::spawn_blocking(f).await {
        Ok(r) => r.map(Json).map_err(ApiError::from),
        Err(e) => Err(ApiError::new(
            StatusCode::INTERNAL_SERVER_ERROR,
            format!("worker failed: {e}"),
            None,
        )),
    }
}

async fn post_whatif(
    State(state): State<Arc<AppState>>,
    body: Bytes,
) -> ApiResult<crate::whatif::WhatIfResponse> {
    let request: WhatIfRequest = serde_json::from_slice(&body).map_err(|e| {
        ApiError::from(AppError::field(
            "body",
            format!("request is not a valid WhatIfRequest: {e}"),
        ))
    })?;
    let snapshot = state.current();
    blocking(move || whatif_request(&snapshot, &request)).await
}

async fn get_topics(
    State(state): State<Arc<AppState>>,
) -> ApiResult<Vec<crate::whatif::TopicInfo>> {
    Ok(Json(topics(&state.current())))
}

#[derive(Debug, Deserialize)]
struct VolumeQuery {
    days: Option<String>,
}

async fn get_volume(
    State(state): State<Arc<AppState>>,
    Path(u): Path<String>,
    Query(q): Query<VolumeQuery>,
) -> ApiResult<crate::whatif::TopicVolume> {
    let snapshot = state.current();
    let u: usize = u.parse().map_err(|_| {
        ApiError::from(AppError::field(
            "topic",
            format!("`{u}` is not a topic number"),
        ))
    })?;
    let days = match q.days {
        None => snapshot.meta.config.serve.history_days,
        Some(d) => match d.parse::<usize>() {
            Ok(n) if n > 0 => n,
            _ => {
                return Err(
                    AppError::field("days", format!("`{d}` is not a positive integer")).into(),
                )
            }
        },
    };
    Ok(Json(topic_volume(&snapshot, u, days)?))
}

#[derive(Debug, Deserialize)]
struct VariantQuery {
    variant: Option<String>,
}

async fn get_prediction_vs_actual(
    State(state): State<Arc<AppState>>,
    Path(id): Path<String>,
    Query(q): Query<VariantQuery>,
) -> ApiResult<crate::whatif::PredictionVsActual> {
    let snapshot = state.current();
    blocking(move || prediction_vs_actual(&snapshot, &id, q.variant.as_deref())).await
}

#[derive(Debug, Serialize, Deserialize)]
pub struct Health {
    pub status: String,
    pub snapshot_version: u32,
}

async fn get_health(State(state): State<Arc<AppState>>) -> Json<Health> {
    Json(Health {
        status: "ok".into(),
        snapshot_version: state.current().meta.version,
    })
}

async fn get_snapshot(State(state): State<Arc<AppState>>) -> Json<SnapshotMeta> {
    Json(state.current().meta.clone())
}

async fn not_found(uri: axum::http::Uri) -> ApiError {
    ApiError::new(
        StatusCode::NOT_FOUND,
        format!("no route for {}", uri.path()),
        None,
    )
}

pub fn router(state: Arc<AppState>) -> Router {
    Router::new()
        .route("/whatif", post(post_whatif))
        .route("/topics", get(get_topics))
        .route("/topics/{u}/volume", get(get_volume))
        .route(
            "/articles/{id}/prediction-vs-actual",
            get(get_prediction_vs_actual),
        )
        .route("/health", get(get_health))
        .route("/snapshot", get(get_snapshot))
        .fallback(not_found)
        .with_state(state)
}

/// Reloads the snapshot directory on SIGHUP.
#[cfg(unix)]
fn spawn_reloader(state: Arc<AppState>) {
    use tokio::signal::unix::{signal, SignalKind};
    let Some(dir) = state.dir.clone() else { return };
    let Ok(mut hup) = signal(SignalKind::hangup()) else {
        return;
    };
    tokio::spawn(async move {
        while hup.recv().await.is_some() {
            let d = dir.clone();
            match tokio::task::spawn_blocking(move || Snapshot::load(&d)).await {
                Ok(Ok(s)) => {
                    state.replace(s);
                    tracing::info!(dir = %dir.display(), "snapshot reloaded");
                }
                Ok(Err(e)) => {
                    tracing::error!(error = %e, "reload failed; keeping the current snapshot")
                }
                Err(e) => tracing::error!(error = %e, "reload task failed"),
            }
        }
    });
}

#[cfg(not(unix))]
fn spawn_reloader(_: Arc<AppState>) {}

pub async fn serve(state: Arc<AppState>, bind: &str) -> Result<(), AppError> {
    let listener = tokio::net::TcpListener::bind(bind)
        .await
        .map_err(|e| AppError::io(format!("bind address {bind}"), e))?;
    let addr = listener.local_addr().map_err(|e| AppError::io(bind, e))?;
    tracing::info!(%addr, "listening");
    spawn_reloader(state.clone());
    axum::serve(listener, router(state))
        .with_graceful_shutdown(async {
            let _ = tokio::signal::ctrl_c().await;
        })
        .await
        .map_err(|e| AppError::io(addr.to_string(), e))
}
