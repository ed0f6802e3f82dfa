use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::Json;
use serde::Serialize;

/// Error reply body: `{"error": {"code": ..., "message": ...}}`.
#[derive(Debug)]
pub struct ApiError {
    pub status: StatusCode,
    pub code: &'static str,
    pub message: String,
}

#[derive(Serialize)]
struct Body<'a> {
    error: Detail<'a>,
}

#[derive(Serialize)]
struct Detail<'a> {
    code: &'a str,
    message: &'a str,
}

impl ApiError {
    pub fn new(status: StatusCode, code: &'static str, message: impl Into<String>) -> Self {
        Self { status, code, message: message.into() }
    }

    pub fn not_found(what: &str) -> Self {
        Self::new(StatusCode::NOT_FOUND, "not_found", format!("unknown {what}"))
    }

    pub fn conflict(message: impl Into<String>) -> Self {
        Self::new(StatusCode::CONFLICT, "conflict", message)
    }

    pub fn bad_request(message: impl Into<String>) -> Self {
        Self::new(StatusCode::BAD_REQUEST, "bad_request", message)
    }

    pub fn internal(message: impl Into<String>) -> Self {
        Self::new(StatusCode::INTERNAL_SERVER_ERROR, "internal", message)
    }
}

impl From<dipaint_core::Error> for ApiError {
    fn from(e: dipaint_core::Error) -> Self {
        use dipaint_core::Error as E;
        let (status, code) = match &e {
            E::InvalidArgument(_) | E::Image(_) => (StatusCode::BAD_REQUEST, "invalid_argument"),
            E::Format(_) | E::Config(_) => (StatusCode::BAD_REQUEST, "configuration"),
            E::EmptySelection => (StatusCode::UNPROCESSABLE_ENTITY, "empty_selection"),
            E::Precondition(_) => (StatusCode::CONFLICT, "precondition"),
            E::NothingToUndo => (StatusCode::CONFLICT, "nothing_to_undo"),
            E::Resource(_) => (StatusCode::PAYLOAD_TOO_LARGE, "resource_limit"),
            E::Solver { .. } | E::Io(_) => (StatusCode::INTERNAL_SERVER_ERROR, "pipeline"),
        };
        Self::new(status, code, e.to_string())
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        let body = Body { error: Detail { code: self.code, message: &self.message } };
        (self.status, Json(body)).into_response()
    }
}
