//! Problem-detail errors for the HTTP API.

use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::Json;
use serde::{Deserialize, Serialize};

use jarvis_core::Error;

/// Body of every non-2xx response.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Problem {
    pub code: String,
    pub message: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub field: Option<String>,
}

#[derive(Debug, thiserror::Error)]
#[error("{status} {code}: {message}")]
pub struct ApiError {
    pub status: StatusCode,
    pub code: &'static str,
    pub message: String,
    pub field: Option<String>,
}

impl ApiError {
    pub fn new(status: StatusCode, code: &'static str, message: impl Into<String>) -> Self {
        Self {
            status,
            code,
            message: message.into(),
            field: None,
        }
    }

    pub fn bad_body(message: impl Into<String>) -> Self {
        Self::new(StatusCode::BAD_REQUEST, "invalid_body", message)
    }

    pub fn unauthorized() -> Self {
        Self::new(
            StatusCode::UNAUTHORIZED,
            "unauthorized",
            "missing or wrong bearer token",
        )
    }

    pub fn problem(&self) -> Problem {
        Problem {
            code: self.code.to_string(),
            message: self.message.clone(),
            field: self.field.clone(),
        }
    }
}

impl From<Error> for ApiError {
    fn from(e: Error) -> Self {
        let message = e.to_string();
        let (status, code) = match &e {
            Error::Validation { .. } => (StatusCode::BAD_REQUEST, "validation"),
            Error::MissingImage(_) => (StatusCode::BAD_REQUEST, "missing_image"),
            Error::NotFound(_) => (StatusCode::NOT_FOUND, "not_found"),
            Error::Conflict(_) => (StatusCode::CONFLICT, "conflict"),
            Error::EncoderUnavailable(_) => (StatusCode::SERVICE_UNAVAILABLE, "encoder_unavailable"),
            Error::AdjudicationUnavailable(_) => (StatusCode::SERVICE_UNAVAILABLE, "adjudication_unavailable"),
            Error::CorruptLog { .. } | Error::Io(_) | Error::Json(_) => (StatusCode::INTERNAL_SERVER_ERROR, "internal"),
        };
        let field = match &e {
            Error::MissingImage(_) => Some("image_refs".to_string()),
            other => other.field().map(str::to_string),
        };
        Self {
            status,
            code,
            message,
            field,
        }
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        if self.status.is_server_error() {
            tracing::warn!(code = self.code, "{}", self.message);
        }
        (self.status, Json(self.problem())).into_response()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn core_errors_map_to_statuses() {
        let v = ApiError::from(Error::validation("created_at", "too far ahead"));
        assert_eq!(
            (v.status, v.code, v.field.as_deref()),
            (StatusCode::BAD_REQUEST, "validation", Some("created_at"))
        );
        assert_eq!(
            ApiError::from(Error::NotFound("x".into())).status,
            StatusCode::NOT_FOUND
        );
        assert_eq!(ApiError::from(Error::Conflict("x".into())).status, StatusCode::CONFLICT);
        assert_eq!(
            ApiError::from(Error::EncoderUnavailable("x".into())).status,
            StatusCode::SERVICE_UNAVAILABLE
        );
    }

    #[test]
    fn problem_omits_absent_field() {
        let p = ApiError::from(Error::NotFound("case-000009".into())).problem();
        let json = serde_json::to_string(&p).unwrap();
        assert!(!json.contains("field"));
        assert!(json.contains("\"code\":\"not_found\""));
    }
}
