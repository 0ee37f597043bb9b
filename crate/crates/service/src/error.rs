use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::Json;
use serde::Serialize;
use vizrec_core::Error;

/// Error body: `{"error": code, "message": text}`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ErrorBody {
    pub error: String,
    pub message: String,
}

#[derive(Debug)]
pub struct ApiError {
    pub status: StatusCode,
    pub code: &'static str,
    pub message: String,
}

impl ApiError {
    pub fn new(status: StatusCode, code: &'static str, message: impl Into<String>) -> Self {
        ApiError { status, code, message: message.into() }
    }

    pub fn bad_request(message: impl Into<String>) -> Self {
        ApiError::new(StatusCode::BAD_REQUEST, "bad_request", message)
    }

    pub fn not_found(id: &str) -> Self {
        ApiError::new(StatusCode::NOT_FOUND, "not_found", format!("no dataset with id `{id}`"))
    }

    /// Errors raised while reading an upload.
    pub fn upload(err: Error) -> Self {
        match err {
            Error::Io(_) => ApiError::internal(err),
            _ => ApiError::new(StatusCode::BAD_REQUEST, "invalid_dataset", err.to_string()),
        }
    }

    /// Errors raised while answering a query against a registered dataset.
    pub fn query(err: Error) -> Self {
        let message = err.to_string();
        match err {
            Error::EmptySupport => ApiError::new(
                StatusCode::UNPROCESSABLE_ENTITY,
                "zero_support",
                format!("{message}; zero-support visualizations are excluded from the hypothesis count"),
            ),
            Error::OutsideQueryClass(_) | Error::UnknownFeature(_) => {
                ApiError::new(StatusCode::UNPROCESSABLE_ENTITY, "outside_query_class", message)
            }
            Error::InvalidPredicate(_) | Error::InvalidVisualization(_) | Error::MisalignedSupports => {
                ApiError::new(StatusCode::UNPROCESSABLE_ENTITY, "invalid_query", message)
            }
            Error::InvalidParameter(_) | Error::Json(_) => {
                ApiError::new(StatusCode::BAD_REQUEST, "invalid_parameter", message)
            }
            Error::InstanceTooLarge(_) => ApiError::new(StatusCode::UNPROCESSABLE_ENTITY, "too_large", message),
            _ => ApiError::internal(err),
        }
    }

    pub fn internal(err: impl std::fmt::Display) -> Self {
        ApiError::new(StatusCode::INTERNAL_SERVER_ERROR, "internal", err.to_string())
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        let body = ErrorBody { error: self.code.to_string(), message: self.message };
        (self.status, Json(body)).into_response()
    }
}
