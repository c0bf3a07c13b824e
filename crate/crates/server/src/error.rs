use axum::extract::rejection::JsonRejection;
use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::Json;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use assess_core::grading::GradingError;
use assess_core::{BankError, ProfileError, SelectionError, SessionError};

use crate::store::StoreError;

/// Uniform error envelope returned by every endpoint.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ErrorBody {
    pub code: String,
    pub message: String,
    pub details: Value,
}

#[derive(Debug, Clone)]
pub struct ApiError {
    pub status: StatusCode,
    pub code: &'static str,
    pub message: String,
    pub details: Value,
}

impl ApiError {
    pub fn new(status: StatusCode, code: &'static str, message: impl Into<String>) -> Self {
        Self { status, code, message: message.into(), details: Value::Null }
    }

    pub fn with_details(mut self, details: Value) -> Self {
        self.details = details;
        self
    }

    pub fn unauthenticated(message: impl Into<String>) -> Self {
        Self::new(StatusCode::UNAUTHORIZED, "unauthenticated", message)
    }

    pub fn forbidden(message: impl Into<String>) -> Self {
        Self::new(StatusCode::FORBIDDEN, "forbidden", message)
    }

    pub fn not_found(what: impl std::fmt::Display) -> Self {
        Self::new(StatusCode::NOT_FOUND, "not_found", format!("{what} not found"))
    }

    pub fn conflict(message: impl Into<String>) -> Self {
        Self::new(StatusCode::CONFLICT, "conflict", message)
    }

    pub fn bad_request(message: impl Into<String>) -> Self {
        Self::new(StatusCode::BAD_REQUEST, "invalid_request", message)
    }

    pub fn internal(message: impl Into<String>) -> Self {
        Self::new(StatusCode::INTERNAL_SERVER_ERROR, "internal", message)
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        let body = ErrorBody { code: self.code.to_owned(), message: self.message, details: self.details };
        (self.status, Json(body)).into_response()
    }
}

impl From<JsonRejection> for ApiError {
    fn from(rejection: JsonRejection) -> Self {
        ApiError::bad_request(rejection.body_text())
    }
}

impl From<BankError> for ApiError {
    fn from(err: BankError) -> Self {
        match &err {
            BankError::UnknownQuestion(id) => ApiError::not_found(format_args!("question `{id}`")),
            BankError::UnknownTopic { topic, question: None } => ApiError::not_found(format_args!("topic `{topic}`")),
            _ => {
                let details: Vec<Value> = err
                    .violations()
                    .into_iter()
                    .map(|v| json!({ "code": v.code(), "message": v.to_string() }))
                    .collect();
                ApiError::new(StatusCode::UNPROCESSABLE_ENTITY, "validation_failed", err.to_string())
                    .with_details(Value::Array(details))
            }
        }
    }
}

impl From<SelectionError> for ApiError {
    fn from(err: SelectionError) -> Self {
        match err {
            SelectionError::MissingProfile(_) => ApiError::forbidden(err.to_string()),
            SelectionError::UnknownTopic(_) | SelectionError::InvalidCriteria(_) => {
                ApiError::new(StatusCode::BAD_REQUEST, "invalid_criteria", err.to_string())
            }
        }
    }
}

impl From<GradingError> for ApiError {
    fn from(err: GradingError) -> Self {
        let question = match &err {
            GradingError::ShapeMismatch { question, .. } | GradingError::UnknownQuestion(question) => question.clone(),
        };
        ApiError::new(StatusCode::BAD_REQUEST, "invalid_answer", err.to_string())
            .with_details(json!({ "question_id": question }))
    }
}

impl From<SessionError> for ApiError {
    fn from(err: SessionError) -> Self {
        match err {
            SessionError::Transition { from, to } => ApiError::conflict(err.to_string())
                .with_details(json!({ "from": from, "to": to })),
            SessionError::NotInSession(ref id) => {
                let details = json!({ "question_id": id });
                ApiError::new(StatusCode::BAD_REQUEST, "invalid_answer", err.to_string()).with_details(details)
            }
            SessionError::Grading(g) => g.into(),
        }
    }
}

impl From<ProfileError> for ApiError {
    fn from(err: ProfileError) -> Self {
        match err {
            ProfileError::OutOfOrder { .. } => ApiError::conflict(err.to_string()),
            _ => ApiError::internal(err.to_string()),
        }
    }
}

impl From<StoreError> for ApiError {
    fn from(err: StoreError) -> Self {
        ApiError::new(StatusCode::INTERNAL_SERVER_ERROR, "storage_failure", err.to_string())
    }
}
