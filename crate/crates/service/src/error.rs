use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::Json;
use thiserror::Error;

use sentinel_core::features::UrlError;
use sentinel_core::reputation::ReputationError;
use sentinel_core::scoring::ScoringError;

use crate::wire::ErrorBody;

#[derive(Debug, Error)]
pub enum ApiError {
    #[error(transparent)]
    Url(#[from] UrlError),
    #[error("request body does not match the schema: {0}")]
    Schema(String),
    #[error("unknown session {0}")]
    UnknownSession(String),
    #[error("no model bundle is loaded")]
    BundleNotLoaded,
    #[error("internal error: {0}")]
    Internal(String),
}

impl ApiError {
    pub fn status(&self) -> StatusCode {
        match self {
            ApiError::Url(_) => StatusCode::BAD_REQUEST,
            ApiError::Schema(_) => StatusCode::UNPROCESSABLE_ENTITY,
            ApiError::UnknownSession(_) => StatusCode::NOT_FOUND,
            ApiError::BundleNotLoaded => StatusCode::SERVICE_UNAVAILABLE,
            ApiError::Internal(_) => StatusCode::INTERNAL_SERVER_ERROR,
        }
    }

    pub fn code(&self) -> &'static str {
        match self {
            ApiError::Url(e) => e.code(),
            ApiError::Schema(_) => "schema_violation",
            ApiError::UnknownSession(_) => "unknown_session",
            ApiError::BundleNotLoaded => "bundle_not_loaded",
            ApiError::Internal(_) => "internal_error",
        }
    }
}

impl From<ScoringError> for ApiError {
    fn from(e: ScoringError) -> Self {
        ApiError::Internal(e.to_string())
    }
}

impl From<ReputationError> for ApiError {
    fn from(e: ReputationError) -> Self {
        match e {
            ReputationError::Url(u) => ApiError::Url(u),
            other => ApiError::Internal(other.to_string()),
        }
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        if matches!(self, ApiError::Internal(_)) {
            tracing::error!(error = %self, "request failed");
        }
        let body = ErrorBody {
            error_code: self.code().to_string(),
            message: self.to_string(),
        };
        (self.status(), Json(body)).into_response()
    }
}
