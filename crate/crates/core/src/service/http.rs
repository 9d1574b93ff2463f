//! HTTP API over [`GradingService`].
//!
//! | method | path | body | response |
//! |---|---|---|---|
//! | POST | `/drafts/import` | line-delimited drafts (text) | `ImportReport` |
//! | POST | `/sessions` | `{"grader_id", "essay_id"}` | `SessionView` |
//! | GET | `/sessions/{id}` | | `SessionView` |
//! | POST | `/sessions/{id}/actions` | `Action` | `SessionView` |
//! | POST | `/sessions/{id}/finalize` | | `FeedbackExport` |
//! | GET | `/essays/{id}/context` | | `FinalDraftContext` |
//! | GET | `/analytics/essays/{id}` | | `EssayUsageSummary` |
//! | GET | `/analytics/adoption` | | `AdoptionReport` |
//! | GET | `/healthz` | | `ok` |
//!
//! Errors come back as `{"error": "..."}` with a matching status code.

use std::sync::Arc;

use axum::extract::{Path, State};
use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use serde::Deserialize;

use super::{Action, GradingService};
use crate::error::ServiceError;

#[derive(Debug, Deserialize)]
pub struct OpenRequest {
    pub grader_id: String,
    pub essay_id: String,
}

pub struct ApiError(ServiceError);

impl From<ServiceError> for ApiError {
    fn from(e: ServiceError) -> Self {
        ApiError(e)
    }
}

pub fn status_for(error: &ServiceError) -> StatusCode {
    match error {
        ServiceError::NotFound(_) => StatusCode::NOT_FOUND,
        ServiceError::Unauthorized { .. } => StatusCode::FORBIDDEN,
        ServiceError::Locked(_) | ServiceError::Finalized(_) => StatusCode::CONFLICT,
        ServiceError::InvalidForCondition { .. } | ServiceError::InvalidAction(_) | ServiceError::MissingScore => {
            StatusCode::UNPROCESSABLE_ENTITY
        }
        ServiceError::Precondition(_) => StatusCode::PRECONDITION_FAILED,
        ServiceError::Anchor(_) | ServiceError::Domain(_) => StatusCode::BAD_REQUEST,
        ServiceError::Pipeline(_) => StatusCode::BAD_GATEWAY,
        ServiceError::Log(_) | ServiceError::Storage(_) => StatusCode::INTERNAL_SERVER_ERROR,
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        let status = status_for(&self.0);
        if status.is_server_error() {
            tracing::error!(error = %self.0, "request failed");
        }
        (status, Json(serde_json::json!({ "error": self.0.to_string() }))).into_response()
    }
}

type Api<T> = Result<Json<T>, ApiError>;
type Shared = State<Arc<GradingService>>;

pub fn router(service: Arc<GradingService>) -> Router {
    Router::new()
        .route("/healthz", get(|| async { "ok" }))
        .route("/drafts/import", post(import))
        .route("/sessions", post(open))
        .route("/sessions/{id}", get(get_session))
        .route("/sessions/{id}/actions", post(act))
        .route("/sessions/{id}/finalize", post(finalize))
        .route("/essays/{id}/context", get(context))
        .route("/analytics/essays/{id}", get(essay_summary))
        .route("/analytics/adoption", get(adoption))
        .with_state(service)
}

async fn import(State(s): Shared, body: String) -> Api<super::ImportReport> {
    Ok(Json(s.import_drafts(&body)?))
}

async fn open(State(s): Shared, Json(req): Json<OpenRequest>) -> Api<super::SessionView> {
    Ok(Json(s.open_session(&req.grader_id, &req.essay_id).await?))
}

async fn get_session(State(s): Shared, Path(id): Path<String>) -> Api<super::SessionView> {
    Ok(Json(s.get_session(&id).await?))
}

async fn act(State(s): Shared, Path(id): Path<String>, Json(action): Json<Action>) -> Api<super::SessionView> {
    Ok(Json(s.apply_action(&id, action).await?))
}

async fn finalize(State(s): Shared, Path(id): Path<String>) -> Api<super::FeedbackExport> {
    Ok(Json(s.finalize_and_export(&id).await?))
}

async fn context(State(s): Shared, Path(id): Path<String>) -> Api<super::FinalDraftContext> {
    Ok(Json(s.final_draft_context(&id).await?))
}

async fn essay_summary(State(s): Shared, Path(id): Path<String>) -> Api<crate::analytics::EssayUsageSummary> {
    Ok(Json(s.essay_summary(&id)?))
}

async fn adoption(State(s): Shared) -> Json<crate::analytics::AdoptionReport> {
    Json(s.adoption_report())
}

/// Serves the API until the process is stopped.
pub async fn serve(service: Arc<GradingService>, bind: &str) -> std::io::Result<()> {
    let listener = tokio::net::TcpListener::bind(bind).await?;
    tracing::info!(addr = %listener.local_addr()?, "grading service listening");
    axum::serve(listener, router(service)).await
}
