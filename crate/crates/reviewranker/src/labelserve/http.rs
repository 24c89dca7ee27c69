//! HTTP routes.
//!
//! | method | path | |
//! |---|---|---|
//! | GET | `/api/session/{labeler}` | assignment and progress |
//! | GET | `/api/session/{labeler}/next` | next review, or `done` |
//! | POST | `/api/reviews/{id}/label` | submit a label |
//! | POST | `/api/reviews/{id}/resolve` | admin decision for a tie |
//! | GET | `/api/agreement` | shared-pool agreement |
//! | GET | `/api/export?format=csv\|jsonl` | resolved corpus file |
//! | GET | `/healthz` | liveness |
//!
//! Everything else is served from the frontend asset directory, or a small
//! built-in page when none is configured. Errors are JSON objects with an
//! `error` message; label validation errors also carry `fields`.

use std::future::Future;
use std::net::SocketAddr;
use std::path::PathBuf;
use std::sync::{Arc, RwLock};

use axum::extract::{Path, Query, State};
use axum::http::{header, HeaderValue, StatusCode};
use axum::response::{Html, IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use serde::Deserialize;
use serde_json::{json, Value};
use tokio::net::TcpListener;
use tower_http::services::ServeDir;

use super::{LabelService, ServiceError};
use crate::corpus_io::{write_corpus, Format};
use crate::error::{Error, Result};

pub type SharedService = Arc<RwLock<LabelService>>;

const PLACEHOLDER_PAGE: &str = "<!doctype html>
<html><head><meta charset=\"utf-8\"><title>reviewranker labels</title></head>
<body><h1>reviewranker label service</h1>
<p>No frontend assets are configured. Start the server with <code>--assets DIR</code>
to serve the labeling UI, or use the JSON API under <code>/api</code>.</p></body></html>
";

fn error_body(status: StatusCode, message: impl Into<String>) -> Response {
    (status, Json(json!({ "error": message.into() }))).into_response()
}

impl IntoResponse for ServiceError {
    fn into_response(self) -> Response {
        let message = self.to_string();
        match self {
            ServiceError::UnknownLabeler(_) | ServiceError::UnknownReview(_) => {
                error_body(StatusCode::NOT_FOUND, message)
            }
            ServiceError::NotAssigned { .. } | ServiceError::NotAdmin => error_body(StatusCode::FORBIDDEN, message),
            ServiceError::InvalidLabel(fields) => (
                StatusCode::BAD_REQUEST,
                Json(json!({ "error": message, "fields": fields })),
            )
                .into_response(),
            ServiceError::Internal(e) => {
                log::error!("{e}");
                error_body(StatusCode::INTERNAL_SERVER_ERROR, message)
            }
        }
    }
}

fn read(state: &SharedService) -> std::sync::RwLockReadGuard<'_, LabelService> {
    state.read().unwrap_or_else(|poisoned| poisoned.into_inner())
}

fn write(state: &SharedService) -> std::sync::RwLockWriteGuard<'_, LabelService> {
    state.write().unwrap_or_else(|poisoned| poisoned.into_inner())
}

async fn healthz() -> &'static str {
    "ok"
}

async fn session(State(state): State<SharedService>, Path(labeler): Path<String>) -> Response {
    match read(&state).session(&labeler) {
        Ok(view) => Json(view).into_response(),
        Err(e) => e.into_response(),
    }
}

async fn next(State(state): State<SharedService>, Path(labeler): Path<String>) -> Response {
    match read(&state).next_unlabeled(&labeler) {
        Ok(next) => Json(next).into_response(),
        Err(e) => e.into_response(),
    }
}

async fn submit(State(state): State<SharedService>, Path(id): Path<String>, Json(body): Json<Value>) -> Response {
    match write(&state).submit_label(&id, &body) {
        Ok(ack) => Json(ack).into_response(),
        Err(e) => e.into_response(),
    }
}

async fn resolve(State(state): State<SharedService>, Path(id): Path<String>, Json(body): Json<Value>) -> Response {
    match write(&state).resolve(&id, &body) {
        Ok(ack) => Json(ack).into_response(),
        Err(e) => e.into_response(),
    }
}

async fn agreement(State(state): State<SharedService>) -> Response {
    Json(read(&state).agreement()).into_response()
}

#[derive(Debug, Deserialize)]
struct ExportQuery {
    format: Option<String>,
}

async fn export(State(state): State<SharedService>, Query(query): Query<ExportQuery>) -> Response {
    let format = match query.format.as_deref().map(str::parse::<Format>).transpose() {
        Ok(f) => f.unwrap_or(Format::Csv),
        Err(e) => return error_body(StatusCode::BAD_REQUEST, e.to_string()),
    };
    let resolved = match read(&state).export() {
        Ok(r) => r,
        Err(Error::UnresolvedTies(ids)) => {
            let message = Error::UnresolvedTies(ids.clone()).to_string();
            return (StatusCode::CONFLICT, Json(json!({ "error": message, "review_ids": ids }))).into_response();
        }
        Err(e) => return ServiceError::Internal(e).into_response(),
    };
    let mut body = Vec::new();
    if let Err(e) = write_corpus(&resolved.corpus, &mut body, format) {
        return ServiceError::Internal(e).into_response();
    }
    let content_type = match format {
        Format::Csv => "text/csv; charset=utf-8",
        Format::Jsonl => "application/x-ndjson",
    };
    let mut response = (StatusCode::OK, [(header::CONTENT_TYPE, content_type)], body).into_response();
    if let Ok(v) = HeaderValue::from_str(&resolved.majority_resolved.join(",")) {
        response.headers_mut().insert("x-majority-resolved", v);
    }
    response
}

/// Builds the router. `assets` is the frontend build directory.
pub fn router(state: SharedService, assets: Option<PathBuf>) -> Router {
    let api = Router::new()
        .route("/healthz", get(healthz))
        .route("/api/session/{labeler}", get(session))
        .route("/api/session/{labeler}/next", get(next))
        .route("/api/reviews/{id}/label", post(submit))
        .route("/api/reviews/{id}/resolve", post(resolve))
        .route("/api/agreement", get(agreement))
        .route("/api/export", get(export))
        .with_state(state);
    match assets {
        Some(dir) => api.fallback_service(ServeDir::new(dir)),
        None => api.route("/", get(|| async { Html(PLACEHOLDER_PAGE) })),
    }
}

/// Binds `addr`. A busy port is reported as such.
pub async fn bind(addr: SocketAddr) -> Result<TcpListener> {
    TcpListener::bind(addr).await.map_err(|e| {
        if e.kind() == std::io::ErrorKind::AddrInUse {
            Error::Invalid(format!("cannot listen on {addr}: port {} is already in use", addr.port()))
        } else {
            Error::Invalid(format!("cannot listen on {addr}: {e}"))
        }
    })
}

/// Serves until `shutdown` resolves.
pub async fn serve(
    listener: TcpListener,
    state: SharedService,
    assets: Option<PathBuf>,
    shutdown: impl Future<Output = ()> + Send + 'static,
) -> Result<()> {
    axum::serve(listener, router(state, assets))
        .with_graceful_shutdown(shutdown)
        .await
        .map_err(|e| Error::Invalid(format!("server error: {e}")))
}
