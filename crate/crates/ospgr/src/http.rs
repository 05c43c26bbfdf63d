//! HTTP front end for [`SessionManager`].
//!
//! | verb | path | token | body |
//! |------|------|-------|------|
//! | POST | `/sessions` | none | [`SessionConfig`] |
//! | POST | `/sessions/{id}/join` | none | `{"name": ...}` (optional) |
//! | POST | `/sessions/{id}/preferences` | player | `{"ranks": [...]}` |
//! | GET  | `/sessions/{id}/me` | player | |
//! | GET  | `/sessions/{id}/round` | player | |
//! | POST | `/sessions/{id}/choice` | player | `{"object": "A"}` |
//! | GET  | `/sessions/{id}/status` | admin | |
//! | GET  | `/sessions/{id}/log` | admin | |
//!
//! Tokens travel as `Authorization: Bearer <token>`.

use std::sync::Arc;

use axum::extract::{Path, State};
use axum::http::{header, HeaderMap, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use serde::Deserialize;

use crate::service::{ServiceError, SessionConfig, SessionManager};

type Shared = Arc<SessionManager>;

impl IntoResponse for ServiceError {
    fn into_response(self) -> Response {
        let status = match self {
            ServiceError::UnknownSession => StatusCode::NOT_FOUND,
            ServiceError::Unauthorized => StatusCode::UNAUTHORIZED,
            ServiceError::WrongPhase(_)
            | ServiceError::SessionFull
            | ServiceError::AlreadySubmitted
            | ServiceError::AlreadyChosen => StatusCode::CONFLICT,
            ServiceError::InvalidPreferences(_) | ServiceError::UnknownLabel(_) | ServiceError::InvalidConfig(_) => {
                StatusCode::UNPROCESSABLE_ENTITY
            }
        };
        let body = serde_json::json!({ "error": self.kind(), "message": self.to_string() });
        (status, Json(body)).into_response()
    }
}

fn bearer(headers: &HeaderMap) -> Result<&str, ServiceError> {
    headers
        .get(header::AUTHORIZATION)
        .and_then(|v| v.to_str().ok())
        .and_then(|v| v.strip_prefix("Bearer "))
        .map(str::trim)
        .ok_or(ServiceError::Unauthorized)
}

#[derive(Deserialize, Default)]
#[serde(deny_unknown_fields)]
struct JoinBody {
    name: Option<String>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct PreferencesBody {
    ranks: Vec<usize>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct ChoiceBody {
    object: String,
}

pub fn router(manager: Shared) -> Router {
    Router::new()
        .route("/healthz", get(|| async { "ok" }))
        .route("/sessions", post(create))
        .route("/sessions/{id}/join", post(join))
        .route("/sessions/{id}/preferences", post(preferences))
        .route("/sessions/{id}/me", get(me))
        .route("/sessions/{id}/round", get(round))
        .route("/sessions/{id}/choice", post(choice))
        .route("/sessions/{id}/status", get(status))
        .route("/sessions/{id}/log", get(log))
        .with_state(manager)
}

async fn create(State(m): State<Shared>, Json(config): Json<SessionConfig>) -> Response {
    match m.create_session(config) {
        Ok(created) => (StatusCode::CREATED, Json(created)).into_response(),
        Err(e) => e.into_response(),
    }
}

async fn join(State(m): State<Shared>, Path(id): Path<String>, body: Option<Json<JoinBody>>) -> Response {
    let name = body.and_then(|Json(b)| b.name);
    respond(m.join(&id, name))
}

async fn preferences(
    State(m): State<Shared>,
    Path(id): Path<String>,
    headers: HeaderMap,
    Json(body): Json<PreferencesBody>,
) -> Response {
    respond(bearer(&headers).and_then(|t| m.submit_preferences(&id, t, body.ranks)))
}

async fn me(State(m): State<Shared>, Path(id): Path<String>, headers: HeaderMap) -> Response {
    respond(bearer(&headers).and_then(|t| m.player_view(&id, t)))
}

async fn round(State(m): State<Shared>, Path(id): Path<String>, headers: HeaderMap) -> Response {
    respond(bearer(&headers).and_then(|t| m.round_view(&id, t)))
}

async fn choice(
    State(m): State<Shared>,
    Path(id): Path<String>,
    headers: HeaderMap,
    Json(body): Json<ChoiceBody>,
) -> Response {
    respond(bearer(&headers).and_then(|t| m.submit_choice(&id, t, &body.object)))
}

async fn status(State(m): State<Shared>, Path(id): Path<String>, headers: HeaderMap) -> Response {
    respond(bearer(&headers).and_then(|t| m.admin_status(&id, t)))
}

async fn log(State(m): State<Shared>, Path(id): Path<String>, headers: HeaderMap) -> Response {
    match bearer(&headers).and_then(|t| m.session_log(&id, t)) {
        Ok(log) => (
            [(header::CONTENT_TYPE, "application/json")],
            crate::format::encode_session(&log),
        )
            .into_response(),
        Err(e) => e.into_response(),
    }
}

fn respond<T: serde::Serialize>(result: Result<T, ServiceError>) -> Response {
    match result {
        Ok(value) => Json(value).into_response(),
        Err(e) => e.into_response(),
    }
}

/// Serves until ctrl-c.
pub async fn serve(bind: &str, manager: SessionManager) -> std::io::Result<()> {
    let listener = tokio::net::TcpListener::bind(bind).await?;
    eprintln!("listening on {}", listener.local_addr()?);
    axum::serve(listener, router(Arc::new(manager)))
        .with_graceful_shutdown(async {
            let _ = tokio::signal::ctrl_c().await;
        })
        .await
}
