//! HTTP front end of the annotation store.
//!
//! | route                      | response                                   |
//! |----------------------------|--------------------------------------------|
//! | `GET /api/next?judge=ID`   | 200 task JSON, or 204 when nothing is left |
//! | `POST /api/judgment`       | 200 acknowledgment; 400, 404 or 409        |
//! | `GET /api/progress`        | 200 `{total, judged, judgments, per_judge}`|
//! | `GET /api/export`          | 200 JSONL of every judgment                |
//!
//! Anything else is served from the static directory when one is given.

use std::net::SocketAddr;
use std::path::PathBuf;
use std::sync::Arc;

use axum::extract::rejection::JsonRejection;
use axum::extract::{Query, State};
use axum::http::{header, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use kw2q_core::annotation::{AnnotationError, AnnotationStore};
use serde::{Deserialize, Serialize};
use tower_http::services::ServeDir;

#[derive(Debug, Deserialize)]
pub struct NextQuery {
    pub judge: Option<String>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct JudgmentRequest {
    pub judge_id: String,
    pub pair_id: String,
    pub grammatical: bool,
    pub intent_score: i64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct JudgmentAck {
    /// `stored`, or `duplicate` when an identical judgment already existed.
    pub status: String,
    pub judge_id: String,
    pub pair_id: String,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct ErrorBody {
    pub error: String,
}

fn error(status: StatusCode, message: impl Into<String>) -> Response {
    (status, Json(ErrorBody { error: message.into() })).into_response()
}

fn annotation_error(e: AnnotationError) -> Response {
    let status = match &e {
        AnnotationError::UnknownPair(_) => StatusCode::NOT_FOUND,
        AnnotationError::Conflict { .. } => StatusCode::CONFLICT,
        AnnotationError::Log(_) => StatusCode::INTERNAL_SERVER_ERROR,
        _ => StatusCode::BAD_REQUEST,
    };
    error(status, e.to_string())
}

async fn next(State(store): State<Arc<AnnotationStore>>, Query(q): Query<NextQuery>) -> Response {
    let Some(judge) = q.judge else {
        return error(StatusCode::BAD_REQUEST, "missing judge parameter");
    };
    match store.next_task(&judge) {
        Ok(Some(task)) => Json(task).into_response(),
        Ok(None) => StatusCode::NO_CONTENT.into_response(),
        Err(e) => annotation_error(e),
    }
}

async fn judgment(
    State(store): State<Arc<AnnotationStore>>,
    body: Result<Json<JudgmentRequest>, JsonRejection>,
) -> Response {
    let Json(req) = match body {
        Ok(b) => b,
        Err(e) => return error(StatusCode::BAD_REQUEST, e.body_text()),
    };
    match store.submit_judgment(&req.judge_id, &req.pair_id, req.grammatical, req.intent_score) {
        Ok(ack) => Json(JudgmentAck {
            status: if ack.duplicate { "duplicate" } else { "stored" }.into(),
            judge_id: req.judge_id,
            pair_id: req.pair_id,
        })
        .into_response(),
        Err(e) => annotation_error(e),
    }
}

async fn progress(State(store): State<Arc<AnnotationStore>>) -> Response {
    Json(store.progress()).into_response()
}

async fn export(State(store): State<Arc<AnnotationStore>>) -> Response {
    ([(header::CONTENT_TYPE, "application/x-ndjson")], store.export_jsonl()).into_response()
}

pub fn router(store: Arc<AnnotationStore>, static_dir: Option<PathBuf>) -> Router {
    let api = Router::new()
        .route("/api/next", get(next))
        .route("/api/judgment", post(judgment))
        .route("/api/progress", get(progress))
        .route("/api/export", get(export))
        .with_state(store);
    match static_dir {
        Some(dir) => api.fallback_service(ServeDir::new(dir)),
        None => api,
    }
}

/// Serves until Ctrl-C.
pub async fn serve(addr: SocketAddr, store: Arc<AnnotationStore>, static_dir: Option<PathBuf>) -> std::io::Result<()> {
    let listener = tokio::net::TcpListener::bind(addr).await?;
    axum::serve(listener, router(store, static_dir))
        .with_graceful_shutdown(async {
            let _ = tokio::signal::ctrl_c().await;
        })
        .await
}

/// Blocking wrapper around [`serve`] on a fresh multi-threaded runtime.
pub fn run(addr: SocketAddr, store: Arc<AnnotationStore>, static_dir: Option<PathBuf>) -> std::io::Result<()> {
    tokio::runtime::Builder::new_multi_thread()
        .enable_all()
        .build()?
        .block_on(serve(addr, store, static_dir))
}
