//! Errors surfaced to command-line and HTTP clients.

use axum::http::StatusCode;
use serde::Serialize;

use semifactual::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ErrorKind {
    BadRequest,
    NotFound,
    NotPositive,
    EmptyResult,
    Timeout,
    Internal,
}

#[derive(Debug, Clone, Serialize)]
pub struct AppError {
    pub error: String,
    pub kind: ErrorKind,
    pub field: Option<String>,
}

impl AppError {
    pub fn new(kind: ErrorKind, field: Option<&str>, error: impl Into<String>) -> Self {
        AppError {
            error: error.into(),
            kind,
            field: field.map(str::to_string),
        }
    }

    pub fn bad_request(field: &str, error: impl Into<String>) -> Self {
        AppError::new(ErrorKind::BadRequest, Some(field), error)
    }

    pub fn not_found(field: &str, error: impl Into<String>) -> Self {
        AppError::new(ErrorKind::NotFound, Some(field), error)
    }

    pub fn internal(error: impl Into<String>) -> Self {
        AppError::new(ErrorKind::Internal, None, error)
    }

    pub fn status(&self) -> StatusCode {
        match self.kind {
            ErrorKind::BadRequest => StatusCode::BAD_REQUEST,
            ErrorKind::NotFound => StatusCode::NOT_FOUND,
            ErrorKind::NotPositive | ErrorKind::EmptyResult => StatusCode::UNPROCESSABLE_ENTITY,
            ErrorKind::Timeout => StatusCode::GATEWAY_TIMEOUT,
            ErrorKind::Internal => StatusCode::INTERNAL_SERVER_ERROR,
        }
    }

    /// Process exit code: 1 for bad input, 2 for internal failures.
    pub fn exit_code(&self) -> i32 {
        match self.kind {
            ErrorKind::Internal => 2,
            _ => 1,
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).unwrap_or_else(|_| format!("{{\"error\":{:?}}}", self.error))
    }
}

impl From<Error> for AppError {
    fn from(e: Error) -> Self {
        let kind = match &e {
            Error::NotPositive { .. } => ErrorKind::NotPositive,
            Error::EmptyResult(_) => ErrorKind::EmptyResult,
            _ => ErrorKind::BadRequest,
        };
        let field = match &e {
            Error::NotPositive { .. } => Some("individual"),
            _ => e.field(),
        };
        AppError::new(kind, field, e.to_string())
    }
}

impl std::fmt::Display for AppError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.error)
    }
}

impl std::error::Error for AppError {}

impl axum::response::IntoResponse for AppError {
    fn into_response(self) -> axum::response::Response {
        (self.status(), axum::Json(self)).into_response()
    }
}
