//! HTTP front end for the collector.
//!
//! Join and submit go through one mutex around [`Collector`], so group
//! assignment and log appends are serialized; the fsync runs on the blocking
//! pool. Audio is served under opaque per-page handles so nothing sent to a
//! participant names the system.

use std::collections::HashMap;
use std::path::{Component, Path, PathBuf};
use std::sync::Arc;

use axum::body::{Body, Bytes};
use axum::extract::{Path as UrlPath, State};
use axum::http::{header, HeaderMap, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use chrono::Utc;
use parking_lot::{Mutex, RwLock};
use serde::Serialize;
use serde_json::json;
use sha2::{Digest, Sha256};

use prosodyeval::collector::{Collector, CollectorError, ResponsePayload};
use prosodyeval::expdesign::TaskMode;

pub struct AppState {
    collector: Arc<Mutex<Collector>>,
    audio_dir: PathBuf,
    admin_token: String,
    app_dir: Option<PathBuf>,
    handle_key: [u8; 32],
    handles: RwLock<HashMap<String, PathBuf>>,
}

impl AppState {
    pub fn new(
        collector: Collector,
        audio_dir: PathBuf,
        admin_token: String,
        app_dir: Option<PathBuf>,
    ) -> Self {
        Self {
            collector: Arc::new(Mutex::new(collector)),
            audio_dir,
            admin_token,
            app_dir,
            handle_key: rand::random(),
            handles: RwLock::new(HashMap::new()),
        }
    }

    fn audio_url(&self, parts: &[&[u8]], audio_ref: &str) -> String {
        let mut hasher = Sha256::new();
        hasher.update(self.handle_key);
        for p in parts {
            hasher.update((p.len() as u64).to_le_bytes());
            hasher.update(p);
        }
        let digest = hasher.finalize();
        let handle = hex::encode(&digest[..16]);
        self.handles
            .write()
            .entry(handle.clone())
            .or_insert_with(|| self.audio_dir.join(audio_ref));
        format!("/audio/{handle}")
    }
}

pub fn router(state: Arc<AppState>) -> Router {
    Router::new()
        .route("/api/experiments/{id}/join", post(join))
        .route("/api/experiments/{id}/export", get(export))
        .route("/api/sessions/{sid}/pages/{n}", get(get_page).post(submit))
        .route("/audio/{handle}", get(audio))
        .route("/app", get(app_index))
        .route("/app/", get(app_index))
        .route("/app/{*path}", get(app_asset))
        .with_state(state)
}

#[derive(Debug)]
pub struct ApiError {
    status: StatusCode,
    kind: &'static str,
    message: String,
}

impl ApiError {
    fn new(status: StatusCode, kind: &'static str, message: impl Into<String>) -> Self {
        Self {
            status,
            kind,
            message: message.into(),
        }
    }
}

impl From<CollectorError> for ApiError {
    fn from(e: CollectorError) -> Self {
        let message = e.to_string();
        let (status, kind) = match e {
            CollectorError::UnknownExperiment(_) => (StatusCode::NOT_FOUND, "UnknownExperiment"),
            CollectorError::UnknownSession(_) => (StatusCode::NOT_FOUND, "UnknownSession"),
            CollectorError::OutOfOrder { .. } => (StatusCode::CONFLICT, "OutOfOrder"),
            CollectorError::Finished => (StatusCode::GONE, "Finished"),
            CollectorError::Validation(_) => (StatusCode::UNPROCESSABLE_ENTITY, "ValidationError"),
            CollectorError::DuplicateSession(_) => (StatusCode::CONFLICT, "DuplicateSession"),
            CollectorError::Corrupt(_) | CollectorError::Io(_) => {
                (StatusCode::INTERNAL_SERVER_ERROR, "InternalError")
            }
        };
        Self {
            status,
            kind,
            message,
        }
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        (
            self.status,
            Json(json!({ "error": self.kind, "message": self.message })),
        )
            .into_response()
    }
}

#[derive(Serialize)]
struct PublicTask<'a> {
    mode: TaskMode,
    scale_points: u8,
    max_replays: u8,
    error_types: &'a [String],
    mos_question: &'a str,
}

#[derive(Serialize)]
struct FamiliarizationView<'a> {
    audio_url: String,
    transcript: &'a str,
    explanation: &'a str,
}

#[derive(Serialize)]
struct JoinResponse<'a> {
    session_id: String,
    group: usize,
    n_pages: usize,
    task: PublicTask<'a>,
    familiarization: Vec<FamiliarizationView<'a>>,
}

fn new_session_id() -> String {
    hex::encode(rand::random::<[u8; 16]>())
}

async fn join(
    State(state): State<Arc<AppState>>,
    UrlPath(id): UrlPath<String>,
) -> Result<Response, ApiError> {
    let collector = state.collector.clone();
    let info = tokio::task::spawn_blocking(move || {
        collector.lock().join(&id, new_session_id(), Utc::now())
    })
    .await
    .map_err(|e| {
        ApiError::new(
            StatusCode::INTERNAL_SERVER_ERROR,
            "InternalError",
            e.to_string(),
        )
    })??;
    let guard = state.collector.lock();
    let task = &guard.plan().task;
    let familiarization = task
        .familiarization_items
        .iter()
        .enumerate()
        .map(|(i, f)| FamiliarizationView {
            audio_url: state.audio_url(&[b"familiarization", &i.to_le_bytes()], &f.audio_ref),
            transcript: &f.transcript,
            explanation: &f.explanation,
        })
        .collect();
    let body = JoinResponse {
        session_id: info.session_id,
        group: info.group,
        n_pages: info.n_pages,
        task: PublicTask {
            mode: task.mode,
            scale_points: task.scale_points,
            max_replays: task.max_replays,
            error_types: &task.error_types,
            mos_question: &task.mos_question,
        },
        familiarization,
    };
    Ok(Json(body).into_response())
}

#[derive(Serialize)]
struct Progress {
    answered: usize,
    total: usize,
}

#[derive(Serialize)]
struct PageResponse<'a> {
    page: usize,
    n_pages: usize,
    tokens: &'a [String],
    #[serde(skip_serializing_if = "Option::is_none")]
    context_question: Option<&'a str>,
    audio_url: String,
    mode: TaskMode,
    scale_points: u8,
    max_replays: u8,
    mos_question: &'a str,
    error_types: &'a [String],
    progress: Progress,
}

fn parse_page(raw: &str) -> Result<usize, ApiError> {
    raw.parse().map_err(|_| {
        ApiError::new(
            StatusCode::BAD_REQUEST,
            "BadRequest",
            format!("invalid page index {raw:?}"),
        )
    })
}

async fn get_page(
    State(state): State<Arc<AppState>>,
    UrlPath((sid, n)): UrlPath<(String, String)>,
) -> Result<Response, ApiError> {
    let n = parse_page(&n)?;
    let guard = state.collector.lock();
    let view = guard.page(&sid, n)?;
    let task = &guard.plan().task;
    let body = PageResponse {
        page: view.index,
        n_pages: view.n_pages,
        tokens: &view.text.tokens,
        context_question: view.text.context_question.as_deref(),
        audio_url: state.audio_url(&[b"page", sid.as_bytes(), &n.to_le_bytes()], view.audio_ref),
        mode: task.mode,
        scale_points: task.scale_points,
        max_replays: task.max_replays,
        mos_question: &task.mos_question,
        error_types: &task.error_types,
        progress: Progress {
            answered: view.index,
            total: view.n_pages,
        },
    };
    Ok(Json(body).into_response())
}

async fn submit(
    State(state): State<Arc<AppState>>,
    UrlPath((sid, n)): UrlPath<(String, String)>,
    body: Bytes,
) -> Result<Response, ApiError> {
    let n = parse_page(&n)?;
    let payload: ResponsePayload = serde_json::from_slice(&body).map_err(|e| {
        ApiError::new(
            StatusCode::UNPROCESSABLE_ENTITY,
            "ValidationError",
            format!("payload: {e}"),
        )
    })?;
    let collector = state.collector.clone();
    let (next, total) = tokio::task::spawn_blocking(move || {
        let mut guard = collector.lock();
        guard.submit(&sid, n, payload, Utc::now())?;
        let total = guard.session(&sid)?.page_order.len();
        Ok::<_, CollectorError>((n + 1, total))
    })
    .await
    .map_err(|e| {
        ApiError::new(
            StatusCode::INTERNAL_SERVER_ERROR,
            "InternalError",
            e.to_string(),
        )
    })??;
    let next = if next >= total {
        json!("finished")
    } else {
        json!(next)
    };
    Ok(Json(json!({ "accepted": true, "next": next })).into_response())
}

async fn export(
    State(state): State<Arc<AppState>>,
    UrlPath(id): UrlPath<String>,
    headers: HeaderMap,
) -> Result<Response, ApiError> {
    let token = headers.get("x-admin-token").and_then(|v| v.to_str().ok());
    if token != Some(state.admin_token.as_str()) {
        return Err(ApiError::new(
            StatusCode::UNAUTHORIZED,
            "Unauthorized",
            "missing or wrong admin token",
        ));
    }
    let body = state.collector.lock().export(&id)?;
    Ok(([(header::CONTENT_TYPE, "application/x-ndjson")], body).into_response())
}

pub fn content_type_for(path: &Path) -> &'static str {
    match path
        .extension()
        .and_then(|e| e.to_str())
        .map(str::to_ascii_lowercase)
        .as_deref()
    {
        Some("wav") => "audio/wav",
        Some("mp3") => "audio/mpeg",
        Some("html") | Some("htm") => "text/html; charset=utf-8",
        Some("js") | Some("mjs") => "text/javascript; charset=utf-8",
        Some("css") => "text/css; charset=utf-8",
        Some("json") => "application/json",
        Some("svg") => "image/svg+xml",
        _ => "application/octet-stream",
    }
}

async fn send_file(path: &Path) -> Result<Response, ApiError> {
    let bytes = tokio::fs::read(path)
        .await
        .map_err(|_| ApiError::new(StatusCode::NOT_FOUND, "NotFound", "no such asset"))?;
    Ok((
        [(header::CONTENT_TYPE, content_type_for(path))],
        Body::from(bytes),
    )
        .into_response())
}

async fn audio(
    State(state): State<Arc<AppState>>,
    UrlPath(handle): UrlPath<String>,
) -> Result<Response, ApiError> {
    let path =
        state.handles.read().get(&handle).cloned().ok_or_else(|| {
            ApiError::new(StatusCode::NOT_FOUND, "NotFound", "unknown audio handle")
        })?;
    send_file(&path).await
}

async fn app_index(State(state): State<Arc<AppState>>) -> Result<Response, ApiError> {
    serve_app(&state, "index.html").await
}

async fn app_asset(
    State(state): State<Arc<AppState>>,
    UrlPath(path): UrlPath<String>,
) -> Result<Response, ApiError> {
    serve_app(&state, if path.is_empty() { "index.html" } else { &path }).await
}

async fn serve_app(state: &AppState, rel: &str) -> Result<Response, ApiError> {
    let not_found = || ApiError::new(StatusCode::NOT_FOUND, "NotFound", "no such asset");
    let root = state.app_dir.as_ref().ok_or_else(not_found)?;
    let rel = Path::new(rel);
    if rel.components().any(|c| !matches!(c, Component::Normal(_))) {
        return Err(not_found());
    }
    send_file(&root.join(rel)).await
}
