//! HTTP/JSON front of the study engine.
//!
//! | method | path | body | response |
//! |---|---|---|---|
//! | POST | `/studies` | `{config, manifest}` | `{study_id, pairs}` |
//! | POST | `/studies/{id}/sessions` | `{worker_id}` | session with quiz |
//! | POST | `/sessions/{id}/quiz` | `{answers}` | `{passed, score, state}` |
//! | GET | `/sessions/{id}/page` | | `{page_index, pairs}` |
//! | POST | `/sessions/{id}/votes` | `{page_index, votes}` | `{accepted, state}` |
//! | GET | `/studies/{id}/status` | | study status |
//! | GET | `/studies/{id}/export` | | vote CSV (`?format=json` for roster and stats) |
//!
//! Errors are `{"code": ..., "message": ...}` with a matching HTTP status.

use std::net::SocketAddr;
use std::path::PathBuf;
use std::sync::{Arc, Mutex, MutexGuard};
use std::time::{SystemTime, UNIX_EPOCH};

use axum::extract::rejection::JsonRejection;
use axum::extract::{Path, Query, State};
use axum::http::{header, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use pcscale_core::collector::{ChoicePayload, Collector, CollectorError, StudyManifest};
use pcscale_core::reports::votes_to_csv;
use pcscale_core::StudyConfig;
use serde::{Deserialize, Serialize};
use tower_http::services::ServeDir;

pub type Clock = Arc<dyn Fn() -> i64 + Send + Sync>;

pub struct AppState {
    collector: Mutex<Collector>,
    clock: Clock,
}

impl AppState {
    pub fn new(clock: Clock) -> Self {
        Self { collector: Mutex::new(Collector::new()), clock }
    }

    /// State stamping votes with wall-clock milliseconds.
    pub fn with_system_clock() -> Self {
        Self::new(Arc::new(|| SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_millis() as i64).unwrap_or(0)))
    }

    fn lock(&self) -> MutexGuard<'_, Collector> {
        // a panic mid-request leaves the engine consistent enough to keep serving
        self.collector.lock().unwrap_or_else(|e| e.into_inner())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ErrorBody {
    pub code: String,
    pub message: String,
}

#[derive(Debug)]
pub struct ApiError {
    status: StatusCode,
    body: ErrorBody,
}

impl ApiError {
    fn new(status: StatusCode, code: &str, message: impl Into<String>) -> Self {
        Self { status, body: ErrorBody { code: code.to_owned(), message: message.into() } }
    }
}

impl From<CollectorError> for ApiError {
    fn from(err: CollectorError) -> Self {
        let status = match err {
            CollectorError::NotFound(_) => StatusCode::NOT_FOUND,
            CollectorError::InvalidConfig(_) => StatusCode::UNPROCESSABLE_ENTITY,
            CollectorError::PermanentlyDisqualified(_) => StatusCode::FORBIDDEN,
            CollectorError::Conflict(_) => StatusCode::CONFLICT,
            CollectorError::NoMoreWork => StatusCode::GONE,
            CollectorError::BadRequest(_) => StatusCode::BAD_REQUEST,
        };
        Self::new(status, err.code(), err.to_string())
    }
}

impl From<JsonRejection> for ApiError {
    fn from(rejection: JsonRejection) -> Self {
        Self::new(StatusCode::BAD_REQUEST, "bad_request", rejection.body_text())
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        (self.status, Json(self.body)).into_response()
    }
}

type ApiResult<T> = Result<T, ApiError>;

#[derive(Debug, Deserialize)]
pub struct CreateStudyRequest {
    #[serde(default)]
    pub config: StudyConfig,
    pub manifest: StudyManifest,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct CreateStudyResponse {
    pub study_id: String,
    pub pairs: usize,
}

#[derive(Debug, Deserialize)]
pub struct StartSessionRequest {
    pub worker_id: String,
}

#[derive(Debug, Deserialize)]
pub struct QuizRequest {
    pub answers: Vec<ChoicePayload>,
}

#[derive(Debug, Deserialize)]
pub struct VotesRequest {
    pub page_index: u32,
    pub votes: Vec<ChoicePayload>,
}

#[derive(Debug, Deserialize)]
pub struct ExportQuery {
    #[serde(default)]
    pub format: Option<String>,
}

async fn create_study(State(state): State<Arc<AppState>>, body: Result<Json<CreateStudyRequest>, JsonRejection>) -> ApiResult<impl IntoResponse> {
    let Json(req) = body?;
    let mut collector = state.lock();
    let study_id = collector.create_study(req.config, req.manifest)?;
    let pairs = collector.status(&study_id)?.pairs;
    log::info!("created {study_id} with {pairs} pairs");
    Ok((StatusCode::CREATED, Json(CreateStudyResponse { study_id, pairs })))
}

async fn start_session(State(state): State<Arc<AppState>>, Path(study): Path<String>, body: Result<Json<StartSessionRequest>, JsonRejection>) -> ApiResult<impl IntoResponse> {
    let Json(req) = body?;
    let session = state.lock().start_session(&study, &req.worker_id)?;
    Ok((StatusCode::CREATED, Json(session)))
}

async fn submit_quiz(State(state): State<Arc<AppState>>, Path(session): Path<String>, body: Result<Json<QuizRequest>, JsonRejection>) -> ApiResult<impl IntoResponse> {
    let Json(req) = body?;
    Ok(Json(state.lock().submit_quiz(&session, &req.answers)?))
}

async fn get_page(State(state): State<Arc<AppState>>, Path(session): Path<String>) -> ApiResult<impl IntoResponse> {
    Ok(Json(state.lock().get_page(&session)?))
}

async fn submit_votes(State(state): State<Arc<AppState>>, Path(session): Path<String>, body: Result<Json<VotesRequest>, JsonRejection>) -> ApiResult<impl IntoResponse> {
    let Json(req) = body?;
    let now = (state.clock)();
    Ok(Json(state.lock().submit_votes(&session, req.page_index, &req.votes, now)?))
}

async fn status(State(state): State<Arc<AppState>>, Path(study): Path<String>) -> ApiResult<impl IntoResponse> {
    Ok(Json(state.lock().status(&study)?))
}

async fn export(State(state): State<Arc<AppState>>, Path(study): Path<String>, Query(query): Query<ExportQuery>) -> ApiResult<Response> {
    let export = state.lock().export(&study)?;
    match query.format.as_deref() {
        None | Some("csv") => Ok(([(header::CONTENT_TYPE, "text/csv; charset=utf-8")], votes_to_csv(&export.votes)).into_response()),
        Some("json") => Ok(Json(export).into_response()),
        Some(other) => Err(ApiError::new(StatusCode::BAD_REQUEST, "bad_request", format!("unknown export format `{other}`"))),
    }
}

async fn fallback() -> ApiError {
    ApiError::new(StatusCode::NOT_FOUND, "not_found", "no such route")
}

/// The service router. With `media_root`, files under it are served at `/media/`.
pub fn router(state: Arc<AppState>, media_root: Option<PathBuf>) -> Router {
    let mut app = Router::new()
        .route("/studies", post(create_study))
        .route("/studies/{id}/sessions", post(start_session))
        .route("/studies/{id}/status", get(status))
        .route("/studies/{id}/export", get(export))
        .route("/sessions/{id}/quiz", post(submit_quiz))
        .route("/sessions/{id}/page", get(get_page))
        .route("/sessions/{id}/votes", post(submit_votes))
        .fallback(fallback)
        .with_state(state);
    if let Some(root) = media_root {
        app = app.nest_service("/media", ServeDir::new(root));
    }
    app
}

/// Bind and serve until Ctrl-C.
pub async fn serve(addr: SocketAddr, media_root: Option<PathBuf>) -> std::io::Result<()> {
    let listener = tokio::net::TcpListener::bind(addr).await?;
    log::info!("listening on {}", listener.local_addr()?);
    let app = router(Arc::new(AppState::with_system_clock()), media_root);
    axum::serve(listener, app)
        .with_graceful_shutdown(async {
            let _ = tokio::signal::ctrl_c().await;
        })
        .await
}
