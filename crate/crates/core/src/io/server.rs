//! Local HTTP/JSON session service.

use std::collections::HashMap;
use std::net::{Ipv4Addr, SocketAddr};
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::{Arc, Mutex};

use axum::body::Bytes;
use axum::extract::{Path, Query, State};
use axum::http::{header, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use serde::Deserialize;
use serde_json::json;

use crate::engine::{EngineError, EngineOptions};
use crate::io::document::parse_document;
use crate::io::session::{Edit, ExportFormat, Session};

#[derive(Default)]
pub struct AppState {
    next_id: AtomicU64,
    sessions: Mutex<HashMap<String, Arc<Mutex<Session>>>>,
}

pub type Shared = Arc<AppState>;

#[derive(Debug)]
pub struct ApiError(StatusCode, String);

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        (self.0, Json(json!({ "error": self.1 }))).into_response()
    }
}

impl From<EngineError> for ApiError {
    fn from(e: EngineError) -> Self {
        let code = match e {
            EngineError::NotRunning(_) => StatusCode::CONFLICT,
            EngineError::Fault(_) | EngineError::Trace(_) => StatusCode::INTERNAL_SERVER_ERROR,
            _ => StatusCode::UNPROCESSABLE_ENTITY,
        };
        ApiError(code, e.to_string())
    }
}

type ApiResult = Result<Response, ApiError>;

fn session(state: &AppState, id: &str) -> Result<Arc<Mutex<Session>>, ApiError> {
    state
        .sessions
        .lock()
        .unwrap()
        .get(id)
        .cloned()
        .ok_or_else(|| ApiError(StatusCode::NOT_FOUND, format!("no session {id}")))
}

fn json_body<T: for<'de> Deserialize<'de>>(body: &Bytes) -> Result<T, ApiError> {
    serde_json::from_slice(body).map_err(|e| ApiError(StatusCode::UNPROCESSABLE_ENTITY, e.to_string()))
}

async fn create(State(state): State<Shared>, body: Bytes) -> ApiResult {
    let doc = parse_document(&body).map_err(|e| ApiError(StatusCode::UNPROCESSABLE_ENTITY, e.to_string()))?;
    let s = Session::new(doc, EngineOptions::default())?;
    let id = format!("s{}", state.next_id.fetch_add(1, Ordering::Relaxed) + 1);
    let view = s.state();
    state.sessions.lock().unwrap().insert(id.clone(), Arc::new(Mutex::new(s)));
    Ok((StatusCode::CREATED, Json(json!({ "id": id, "state": view }))).into_response())
}

async fn get_state(State(state): State<Shared>, Path(id): Path<String>) -> ApiResult {
    let s = session(&state, &id)?;
    let view = s.lock().unwrap().state();
    Ok(Json(view).into_response())
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct StepBody {
    dz: f64,
    #[serde(default)]
    pause_at_event: bool,
}

async fn step(State(state): State<Shared>, Path(id): Path<String>, body: Bytes) -> ApiResult {
    let s = session(&state, &id)?;
    let b: StepBody = json_body(&body)?;
    let r = s.lock().unwrap().step(b.dz, b.pause_at_event)?;
    Ok(Json(r).into_response())
}

async fn edit(State(state): State<Shared>, Path(id): Path<String>, body: Bytes) -> ApiResult {
    let s = session(&state, &id)?;
    let e: Edit = json_body(&body)?;
    let mut s = s.lock().unwrap();
    let created = s.edit(e)?;
    Ok(Json(json!({ "created": created, "state": s.state() })).into_response())
}

async fn undo(State(state): State<Shared>, Path(id): Path<String>) -> ApiResult {
    let s = session(&state, &id)?;
    let mut s = s.lock().unwrap();
    if !s.undo()? {
        return Err(ApiError(StatusCode::CONFLICT, "nothing to undo".into()));
    }
    Ok(Json(s.state()).into_response())
}

#[derive(Deserialize)]
struct ExportQuery {
    #[serde(default = "default_format")]
    format: ExportFormat,
}

fn default_format() -> ExportFormat {
    ExportFormat::Json
}

async fn export(State(state): State<Shared>, Path(id): Path<String>, q: Result<Query<ExportQuery>, axum::extract::rejection::QueryRejection>) -> ApiResult {
    let Query(q) = q.map_err(|e| ApiError(StatusCode::UNPROCESSABLE_ENTITY, e.to_string()))?;
    let s = session(&state, &id)?;
    let text = s.lock().unwrap().export(q.format)?;
    let mime = match q.format {
        ExportFormat::Json => "application/json",
        ExportFormat::Svg => "image/svg+xml",
        ExportFormat::Obj => "text/plain; charset=utf-8",
    };
    Ok(([(header::CONTENT_TYPE, mime)], text).into_response())
}

pub fn router(state: Shared) -> Router {
    Router::new()
        .route("/sessions", post(create))
        .route("/sessions/{id}", get(get_state))
        .route("/sessions/{id}/step", post(step))
        .route("/sessions/{id}/edit", post(edit))
        .route("/sessions/{id}/undo", post(undo))
        .route("/sessions/{id}/export", get(export))
        .with_state(state)
}

/// Serves on 127.0.0.1 only.
pub async fn serve(port: u16) -> std::io::Result<()> {
    let addr = SocketAddr::from((Ipv4Addr::LOCALHOST, port));
    let listener = tokio::net::TcpListener::bind(addr).await?;
    log::info!("listening on http://{}", listener.local_addr()?);
    axum::serve(listener, router(Shared::default())).await
}
