//! JSON-over-HTTP API of the tutor.
//!
//! | method | path | body |
//! |---|---|---|
//! | GET | `/health` | |
//! | GET, POST | `/vocabulary` | tab-separated text (POST) |
//! | POST | `/users` | [`NewUser`] |
//! | GET | `/users/:id` | |
//! | GET | `/users/:id/schedule` | |
//! | GET | `/users/:id/stats` | |
//! | POST | `/users/:id/arms/:arm/next` | `{now?}` |
//! | POST | `/users/:id/arms/:arm/answer` | [`AnswerRequest`] |
//! | GET | `/users/:id/arms/:arm/trials` | |
//! | GET | `/users/:id/arms/:arm/evaluation` | |
//! | POST | `/users/:id/arms/:arm/evaluation/next` | `{now?}` |
//! | POST | `/users/:id/arms/:arm/evaluation/answer` | [`EvaluationAnswerRequest`] |
//!
//! Errors are `{"error": code, "message": text}` with a 4xx/5xx status.
//! `now` fields are honoured only when the service allows client time.

use std::sync::Arc;

use axum::body::Bytes;
use axum::extract::{Path, State};
use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use super::config::ServiceConfig;
use super::service::{Arm, NewUser, ServiceError, TutorService};
use crate::error::Error;
use crate::memory_model::Seconds;

pub type Clock = Arc<dyn Fn() -> Seconds + Send + Sync>;

pub fn system_clock() -> Clock {
    Arc::new(|| {
        std::time::SystemTime::now()
            .duration_since(std::time::UNIX_EPOCH)
            .map(|d| d.as_secs_f64())
            .unwrap_or(0.0)
    })
}

#[derive(Clone)]
struct AppState {
    svc: Arc<TutorService>,
    clock: Clock,
}

#[derive(Debug, Serialize)]
struct ErrorBody {
    error: &'static str,
    message: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    correct: Option<bool>,
}

#[derive(Debug)]
pub struct ApiError {
    status: StatusCode,
    body: ErrorBody,
}

impl ApiError {
    fn new(status: StatusCode, error: &'static str, message: impl Into<String>) -> Self {
        Self { status, body: ErrorBody { error, message: message.into(), correct: None } }
    }
}

impl From<ServiceError> for ApiError {
    fn from(e: ServiceError) -> Self {
        let status = match &e {
            ServiceError::UnknownUser(_) => StatusCode::NOT_FOUND,
            ServiceError::OutsideWindow(_)
            | ServiceError::SessionComplete { .. }
            | ServiceError::Stale { .. }
            | ServiceError::AlreadyAnswered { .. }
            | ServiceError::EvaluationNotOpen { .. }
            | ServiceError::EvaluationComplete
            | ServiceError::Core(Error::TimeWentBackwards { .. }) => StatusCode::CONFLICT,
            ServiceError::InvalidChoice(_)
            | ServiceError::BadRequest(_)
            | ServiceError::Core(Error::Parse { .. })
            | ServiceError::Core(Error::Config(_)) => StatusCode::BAD_REQUEST,
            ServiceError::Unavailable => StatusCode::SERVICE_UNAVAILABLE,
            ServiceError::Core(_) => StatusCode::INTERNAL_SERVER_ERROR,
        };
        if status == StatusCode::INTERNAL_SERVER_ERROR {
            tracing::error!(error = %e, "request failed");
        }
        let correct = match e {
            ServiceError::AlreadyAnswered { correct, .. } => Some(correct),
            _ => None,
        };
        Self { status, body: ErrorBody { error: e.code(), message: e.to_string(), correct } }
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        (self.status, Json(self.body)).into_response()
    }
}

type ApiResult<T> = std::result::Result<Json<T>, ApiError>;

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TimeRequest {
    pub now: Option<Seconds>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AnswerRequest {
    pub trial: u64,
    pub item: String,
    pub chosen: String,
    pub now: Option<Seconds>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EvaluationAnswerRequest {
    pub index: usize,
    pub item: String,
    pub chosen: String,
    pub now: Option<Seconds>,
}

#[derive(Debug, Deserialize)]
struct NewUserRequest {
    #[serde(flatten)]
    user: NewUser,
    now: Option<Seconds>,
}

fn parse_body<T: DeserializeOwned + Default>(body: &Bytes) -> Result<T, ApiError> {
    if body.iter().all(u8::is_ascii_whitespace) {
        return Ok(T::default());
    }
    parse_required(body)
}

fn parse_required<T: DeserializeOwned>(body: &Bytes) -> Result<T, ApiError> {
    serde_json::from_slice(body).map_err(|e| ApiError::new(StatusCode::BAD_REQUEST, "bad_request", e.to_string()))
}

fn parse_arm(s: &str) -> Result<Arm, ApiError> {
    Arm::parse(s).ok_or_else(|| ApiError::new(StatusCode::NOT_FOUND, "unknown_arm", format!("no arm {s:?}")))
}

impl AppState {
    fn now(&self, requested: Option<Seconds>) -> Result<Seconds, ApiError> {
        match requested {
            None => Ok((self.clock)()),
            Some(_) if !self.svc.config().allow_client_time => {
                Err(ApiError::new(StatusCode::BAD_REQUEST, "client_time_disabled", "this server does not accept `now`"))
            }
            Some(t) if t.is_finite() => Ok(t),
            Some(_) => Err(ApiError::new(StatusCode::BAD_REQUEST, "bad_request", "`now` must be finite")),
        }
    }
}

async fn blocking<T, F>(f: F) -> ApiResult<T>
where
    F: FnOnce() -> Result<T, ServiceError> + Send + 'static,
    T: Send + 'static,
{
    match tokio::task::spawn_blocking(f).await {
        Ok(r) => r.map(Json).map_err(ApiError::from),
        Err(e) => Err(ApiError::new(StatusCode::INTERNAL_SERVER_ERROR, "internal", e.to_string())),
    }
}

#[derive(Serialize)]
struct Health {
    status: &'static str,
    users: usize,
    vocabulary: usize,
}

async fn health(State(st): State<AppState>) -> Json<Health> {
    Json(Health { status: "ok", users: st.svc.user_count(), vocabulary: st.svc.vocabulary_len() })
}

#[derive(Serialize)]
struct Imported {
    imported: usize,
    total: usize,
}

async fn get_vocabulary(State(st): State<AppState>) -> Json<Vec<super::vocabulary::VocabularyItem>> {
    Json(st.svc.vocabulary())
}

async fn post_vocabulary(State(st): State<AppState>, body: Bytes) -> ApiResult<Imported> {
    let text = String::from_utf8(body.to_vec())
        .map_err(|_| ApiError::new(StatusCode::BAD_REQUEST, "bad_request", "vocabulary must be UTF-8"))?;
    let svc = st.svc.clone();
    blocking(move || {
        let imported = svc.ingest_vocabulary(&text)?;
        Ok(Imported { imported, total: svc.vocabulary_len() })
    })
    .await
}

async fn create_user(State(st): State<AppState>, body: Bytes) -> Result<(StatusCode, Json<super::service::UserView>), ApiError> {
    let req: NewUserRequest = if body.iter().all(u8::is_ascii_whitespace) {
        NewUserRequest { user: NewUser::default(), now: None }
    } else {
        parse_required(&body)?
    };
    let now = st.now(req.now)?;
    let svc = st.svc.clone();
    let view = blocking(move || svc.create_user(req.user, now)).await?;
    tracing::info!(user = %view.id, "user created");
    Ok((StatusCode::CREATED, view))
}

async fn get_user(State(st): State<AppState>, Path(id): Path<String>) -> ApiResult<super::service::UserView> {
    st.svc.user_view(&id).map(Json).map_err(ApiError::from)
}

async fn get_schedule(State(st): State<AppState>, Path(id): Path<String>) -> ApiResult<super::service::ScheduleView> {
    st.svc.user_view(&id).map(|v| Json(v.schedule)).map_err(ApiError::from)
}

async fn get_stats(State(st): State<AppState>, Path(id): Path<String>) -> ApiResult<super::service::UserStats> {
    st.svc.stats(&id).map(Json).map_err(ApiError::from)
}

async fn next_question(
    State(st): State<AppState>,
    Path((id, arm)): Path<(String, String)>,
    body: Bytes,
) -> ApiResult<super::service::Question> {
    let arm = parse_arm(&arm)?;
    let req: TimeRequest = parse_body(&body)?;
    let now = st.now(req.now)?;
    let svc = st.svc.clone();
    blocking(move || svc.next_question(&id, arm, now)).await
}

async fn answer(
    State(st): State<AppState>,
    Path((id, arm)): Path<(String, String)>,
    body: Bytes,
) -> ApiResult<super::service::AnswerAck> {
    let arm = parse_arm(&arm)?;
    let req: AnswerRequest = parse_required(&body)?;
    let now = st.now(req.now)?;
    let svc = st.svc.clone();
    blocking(move || svc.submit_answer(&id, arm, req.trial, &req.item, &req.chosen, now)).await
}

async fn trials(
    State(st): State<AppState>,
    Path((id, arm)): Path<(String, String)>,
) -> ApiResult<Vec<super::service::TrialRecord>> {
    let arm = parse_arm(&arm)?;
    st.svc.trials(&id, arm).map(Json).map_err(ApiError::from)
}

async fn evaluation_status(
    State(st): State<AppState>,
    Path((id, arm)): Path<(String, String)>,
) -> ApiResult<super::service::EvaluationStatus> {
    let arm = parse_arm(&arm)?;
    st.svc.evaluation_status(&id, arm).map(Json).map_err(ApiError::from)
}

async fn evaluation_next(
    State(st): State<AppState>,
    Path((id, arm)): Path<(String, String)>,
    body: Bytes,
) -> ApiResult<super::service::EvaluationStep> {
    let arm = parse_arm(&arm)?;
    let req: TimeRequest = parse_body(&body)?;
    let now = st.now(req.now)?;
    let svc = st.svc.clone();
    blocking(move || svc.evaluation_next(&id, arm, now)).await
}

async fn evaluation_answer(
    State(st): State<AppState>,
    Path((id, arm)): Path<(String, String)>,
    body: Bytes,
) -> ApiResult<super::service::EvaluationStep> {
    let arm = parse_arm(&arm)?;
    let req: EvaluationAnswerRequest = parse_required(&body)?;
    let now = st.now(req.now)?;
    let svc = st.svc.clone();
    blocking(move || svc.evaluation_answer(&id, arm, req.index, &req.item, &req.chosen, now)).await
}

async fn not_found() -> ApiError {
    ApiError::new(StatusCode::NOT_FOUND, "not_found", "no such route")
}

pub fn router(svc: Arc<TutorService>) -> Router {
    router_with_clock(svc, system_clock())
}

pub fn router_with_clock(svc: Arc<TutorService>, clock: Clock) -> Router {
    Router::new()
        .route("/health", get(health))
        .route("/vocabulary", get(get_vocabulary).post(post_vocabulary))
        .route("/users", post(create_user))
        .route("/users/:id", get(get_user))
        .route("/users/:id/schedule", get(get_schedule))
        .route("/users/:id/stats", get(get_stats))
        .route("/users/:id/arms/:arm/next", post(next_question))
        .route("/users/:id/arms/:arm/answer", post(answer))
        .route("/users/:id/arms/:arm/trials", get(trials))
        .route("/users/:id/arms/:arm/evaluation", get(evaluation_status))
        .route("/users/:id/arms/:arm/evaluation/next", post(evaluation_next))
        .route("/users/:id/arms/:arm/evaluation/answer", post(evaluation_answer))
        .fallback(not_found)
        .with_state(AppState { svc, clock })
}

async fn shutdown_signal() {
    let interrupt = async {
        let _ = tokio::signal::ctrl_c().await;
    };
    #[cfg(unix)]
    let terminate = async {
        match tokio::signal::unix::signal(tokio::signal::unix::SignalKind::terminate()) {
            Ok(mut s) => {
                s.recv().await;
            }
            Err(_) => std::future::pending::<()>().await,
        }
    };
    #[cfg(not(unix))]
    let terminate = std::future::pending::<()>();
    tokio::select! {
        _ = interrupt => {}
        _ = terminate => {}
    }
    tracing::info!("shutting down");
}

/// Opens the store, binds `cfg.bind` and serves until SIGINT or SIGTERM.
pub async fn serve(cfg: ServiceConfig) -> Result<(), ServiceError> {
    let bind = cfg.bind.clone();
    let svc = tokio::task::spawn_blocking(move || TutorService::open(cfg))
        .await
        .map_err(|e| Error::Config(e.to_string()))??;
    let listener = tokio::net::TcpListener::bind(&bind).await.map_err(Error::Io)?;
    tracing::info!(addr = %listener.local_addr().map_err(Error::Io)?, "listening");
    axum::serve(listener, router(Arc::new(svc)))
        .with_graceful_shutdown(shutdown_signal())
        .await
        .map_err(Error::Io)?;
    Ok(())
}
