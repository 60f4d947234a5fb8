//! HTTP/JSON editing sessions.
//!
//! | method | path | |
//! |---|---|---|
//! | GET | `/api/health` | liveness |
//! | POST | `/api/documents` | open a session from `{db, dbd?, separator?}` |
//! | GET | `/api/documents/{id}/view?group=PATH` | group view model |
//! | POST | `/api/documents/{id}/commands` | apply a command, optional `expectedRevision` |
//! | POST | `/api/documents/{id}/undo`, `/redo` | history |
//! | POST | `/api/documents/{id}/copy` | fill the clipboard from `{records: [...]}` |
//! | GET | `/api/documents/{id}/source` | current file as `text/plain`, marks saved |
//! | DELETE | `/api/documents/{id}` | close |
//!
//! Every failure is a 4xx JSON body `{"code": ..., "message": ...}`.

mod view;

use std::collections::HashMap;
use std::path::PathBuf;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::{Arc, Mutex, MutexGuard, RwLock};

use axum::body::Bytes;
use axum::extract::{DefaultBodyLimit, Path, Query, State};
use axum::http::{header, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use dbstudio_core::{parse_dbd, Command, Diagnostic, EditError, GroupPath, Session, TypeRegistry};
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use tower_http::services::ServeDir;

pub use view::{build_view, BoundingBox, FieldNodeView, FieldValue, LinkView, RecordView, SubgroupView, ViewModel, WaypointView};

/// Largest accepted request body.
const BODY_LIMIT: usize = 256 * 1024 * 1024;

#[derive(Debug)]
pub struct ApiError {
    status: StatusCode,
    code: &'static str,
    message: String,
}

impl ApiError {
    fn new(status: StatusCode, code: &'static str, message: impl Into<String>) -> Self {
        ApiError { status, code, message: message.into() }
    }

    fn bad_request(message: impl Into<String>) -> Self {
        Self::new(StatusCode::BAD_REQUEST, "BadRequest", message)
    }

    fn not_found(id: &str) -> Self {
        Self::new(StatusCode::NOT_FOUND, "NotFound", format!("no session '{id}'"))
    }
}

impl From<EditError> for ApiError {
    fn from(e: EditError) -> Self {
        ApiError::new(StatusCode::CONFLICT, e.code(), e.to_string())
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        (self.status, Json(json!({ "code": self.code, "message": self.message }))).into_response()
    }
}

type ApiResult<T> = Result<T, ApiError>;

struct Entry {
    session: Session,
    revision: u64,
}

/// Shared server state: open sessions and the registry used when a request
/// brings no dbd of its own.
#[derive(Clone, Default)]
pub struct AppState {
    inner: Arc<Inner>,
}

#[derive(Default)]
struct Inner {
    sessions: RwLock<HashMap<String, Arc<Mutex<Entry>>>>,
    next_id: AtomicU64,
    default_registry: Option<Arc<TypeRegistry>>,
    history_limit: Option<usize>,
}

impl AppState {
    pub fn new(default_registry: Option<Arc<TypeRegistry>>) -> Self {
        Self::with_options(default_registry, None)
    }

    pub fn with_options(default_registry: Option<Arc<TypeRegistry>>, history_limit: Option<usize>) -> Self {
        AppState {
            inner: Arc::new(Inner {
                default_registry,
                history_limit,
                ..Inner::default()
            }),
        }
    }

    fn entry(&self, id: &str) -> ApiResult<Arc<Mutex<Entry>>> {
        let map = self.inner.sessions.read().unwrap_or_else(|e| e.into_inner());
        map.get(id).cloned().ok_or_else(|| ApiError::not_found(id))
    }

    pub fn session_count(&self) -> usize {
        self.inner.sessions.read().unwrap_or_else(|e| e.into_inner()).len()
    }
}

fn lock(entry: &Mutex<Entry>) -> MutexGuard<'_, Entry> {
    entry.lock().unwrap_or_else(|e| e.into_inner())
}

fn parse_json<T: for<'de> Deserialize<'de>>(body: &[u8]) -> ApiResult<T> {
    serde_json::from_slice(body).map_err(|e| ApiError::bad_request(format!("invalid request body: {e}")))
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct OpenRequest {
    db: String,
    #[serde(default)]
    dbd: Option<String>,
    #[serde(default)]
    separator: Option<String>,
    #[serde(default)]
    name: Option<String>,
}

#[derive(Serialize)]
struct OpenResponse {
    id: String,
    revision: u64,
    diagnostics: Vec<Diagnostic>,
}

#[derive(Serialize)]
struct CommandResponse {
    revision: u64,
    diagnostics: Vec<Diagnostic>,
}

#[derive(Serialize)]
struct RevisionResponse {
    revision: u64,
}

#[derive(Deserialize)]
struct ViewQuery {
    #[serde(default)]
    group: String,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct CopyRequest {
    records: Vec<String>,
}

async fn health() -> Json<Value> {
    Json(json!({ "status": "ok" }))
}

async fn open_session(State(state): State<AppState>, body: Bytes) -> ApiResult<(StatusCode, Json<OpenResponse>)> {
    let req: OpenRequest = parse_json(&body)?;
    let separator = match req.separator.as_deref() {
        None => ':',
        Some(s) => {
            let mut chars = s.chars();
            match (chars.next(), chars.next()) {
                (Some(c), None) => c,
                _ => return Err(ApiError::bad_request("separator must be a single character")),
            }
        }
    };
    let registry = match req.dbd {
        Some(text) => Arc::new(parse_dbd(text.as_bytes()).0),
        None => state.inner.default_registry.clone().unwrap_or_default(),
    };
    if registry.record_types.is_empty() {
        return Err(ApiError::new(
            StatusCode::UNPROCESSABLE_ENTITY,
            "EmptyRegistry",
            "the database definition declares no record types",
        ));
    }
    let name = req.name.unwrap_or_else(|| "document.db".to_string());
    let (mut session, diagnostics) = Session::open(name, req.db.as_bytes(), registry, separator);
    if let Some(limit) = state.inner.history_limit {
        session = session.with_history_limit(limit);
    }
    let id = format!("s{}", state.inner.next_id.fetch_add(1, Ordering::Relaxed) + 1);
    let entry = Entry { session, revision: 0 };
    state
        .inner
        .sessions
        .write()
        .unwrap_or_else(|e| e.into_inner())
        .insert(id.clone(), Arc::new(Mutex::new(entry)));
    tracing::info!(%id, "session opened");
    Ok((StatusCode::CREATED, Json(OpenResponse { id, revision: 0, diagnostics })))
}

async fn close_session(State(state): State<AppState>, Path(id): Path<String>) -> ApiResult<StatusCode> {
    let removed = state.inner.sessions.write().unwrap_or_else(|e| e.into_inner()).remove(&id);
    match removed {
        Some(_) => Ok(StatusCode::NO_CONTENT),
        None => Err(ApiError::not_found(&id)),
    }
}

async fn get_view(
    State(state): State<AppState>,
    Path(id): Path<String>,
    Query(q): Query<ViewQuery>,
) -> ApiResult<Json<ViewModel>> {
    let entry = state.entry(&id)?;
    let e = lock(&entry);
    let group = GroupPath::parse(&q.group, e.session.separator());
    Ok(Json(build_view(&e.session, &group, e.revision)))
}

async fn post_command(
    State(state): State<AppState>,
    Path(id): Path<String>,
    body: Bytes,
) -> ApiResult<Json<CommandResponse>> {
    let entry = state.entry(&id)?;
    let mut value: Value = parse_json(&body)?;
    let expected = match value.as_object_mut().and_then(|o| o.remove("expectedRevision")) {
        None | Some(Value::Null) => None,
        Some(v) => Some(v.as_u64().ok_or_else(|| ApiError::bad_request("expectedRevision must be a non-negative integer"))?),
    };
    let command: Command =
        serde_json::from_value(value).map_err(|e| ApiError::bad_request(format!("invalid command: {e}")))?;
    let mut e = lock(&entry);
    if let Some(rev) = expected.filter(|r| *r != e.revision) {
        return Err(ApiError::new(
            StatusCode::CONFLICT,
            "RevisionConflict",
            format!("expected revision {rev}, session is at {}", e.revision),
        ));
    }
    let diagnostics = e.session.apply(command)?;
    e.revision += 1;
    Ok(Json(CommandResponse { revision: e.revision, diagnostics }))
}

async fn post_undo(State(state): State<AppState>, Path(id): Path<String>) -> ApiResult<Json<RevisionResponse>> {
    let entry = state.entry(&id)?;
    let mut e = lock(&entry);
    e.session.undo()?;
    e.revision += 1;
    Ok(Json(RevisionResponse { revision: e.revision }))
}

async fn post_redo(State(state): State<AppState>, Path(id): Path<String>) -> ApiResult<Json<RevisionResponse>> {
    let entry = state.entry(&id)?;
    let mut e = lock(&entry);
    e.session.redo()?;
    e.revision += 1;
    Ok(Json(RevisionResponse { revision: e.revision }))
}

async fn post_copy(State(state): State<AppState>, Path(id): Path<String>, body: Bytes) -> ApiResult<Json<Value>> {
    let entry = state.entry(&id)?;
    let req: CopyRequest = parse_json(&body)?;
    let mut e = lock(&entry);
    let count = e.session.copy(&req.records).map_err(EditError::from)?;
    Ok(Json(json!({ "count": count })))
}

async fn get_source(State(state): State<AppState>, Path(id): Path<String>) -> ApiResult<Response> {
    let entry = state.entry(&id)?;
    let bytes = lock(&entry).session.save();
    Ok(([(header::CONTENT_TYPE, "text/plain; charset=utf-8")], bytes).into_response())
}

async fn fallback() -> ApiError {
    ApiError::new(StatusCode::NOT_FOUND, "NotFound", "no such endpoint")
}

/// The API routes. When `static_dir` is given, other paths are served from
/// it (the browser editor bundle).
pub fn router(state: AppState, static_dir: Option<PathBuf>) -> Router {
    let api = Router::new()
        .route("/api/health", get(health))
        .route("/api/documents", post(open_session))
        .route("/api/documents/{id}", axum::routing::delete(close_session))
        .route("/api/documents/{id}/view", get(get_view))
        .route("/api/documents/{id}/commands", post(post_command))
        .route("/api/documents/{id}/undo", post(post_undo))
        .route("/api/documents/{id}/redo", post(post_redo))
        .route("/api/documents/{id}/copy", post(post_copy))
        .route("/api/documents/{id}/source", get(get_source))
        .layer(DefaultBodyLimit::max(BODY_LIMIT))
        .with_state(state);
    match static_dir {
        Some(dir) => api.fallback_service(ServeDir::new(dir)),
        None => api.fallback(fallback),
    }
}

/// Serves until the listener fails or ctrl-c is received.
pub async fn serve(listener: tokio::net::TcpListener, state: AppState, static_dir: Option<PathBuf>) -> std::io::Result<()> {
    axum::serve(listener, router(state, static_dir))
        .with_graceful_shutdown(async {
            let _ = tokio::signal::ctrl_c().await;
        })
        .await
}
