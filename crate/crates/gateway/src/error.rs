use serde::{Deserialize, Serialize};

use rating_core::identity::IdentityError;
use rating_core::validation::{ValidationError, DUPLICATE_RATING_MESSAGE, INVALID_RESOURCE_MESSAGE};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ErrorCode {
    InvalidResource,
    DuplicateRating,
    Unauthorized,
    UnknownProvider,
    NotFound,
    BadRequest,
    Internal,
}

impl ErrorCode {
    pub fn status(self) -> u16 {
        match self {
            Self::InvalidResource | Self::UnknownProvider | Self::BadRequest => 400,
            Self::Unauthorized => 401,
            Self::NotFound => 404,
            Self::DuplicateRating => 409,
            Self::Internal => 500,
        }
    }
}

/// Error body returned by every endpoint.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize, thiserror::Error)]
#[error("{code:?}: {message}")]
pub struct ApiError {
    pub code: ErrorCode,
    pub message: String,
}

impl ApiError {
    pub fn new(code: ErrorCode, message: impl Into<String>) -> Self {
        Self { code, message: message.into() }
    }

    pub fn invalid_resource() -> Self {
        Self::new(ErrorCode::InvalidResource, INVALID_RESOURCE_MESSAGE)
    }

    pub fn duplicate_rating() -> Self {
        Self::new(ErrorCode::DuplicateRating, DUPLICATE_RATING_MESSAGE)
    }

    pub fn unauthorized(message: impl Into<String>) -> Self {
        Self::new(ErrorCode::Unauthorized, message)
    }

    pub fn not_found(message: impl Into<String>) -> Self {
        Self::new(ErrorCode::NotFound, message)
    }

    pub fn bad_request(message: impl Into<String>) -> Self {
        Self::new(ErrorCode::BadRequest, message)
    }

    pub fn internal(message: impl Into<String>) -> Self {
        Self::new(ErrorCode::Internal, message)
    }

    pub fn status(&self) -> u16 {
        self.code.status()
    }
}

impl From<ValidationError> for ApiError {
    fn from(e: ValidationError) -> Self {
        match e {
            ValidationError::InvalidResource => Self::invalid_resource(),
            ValidationError::DuplicateRating => Self::duplicate_rating(),
            ValidationError::Registry(msg) => Self::internal(msg),
        }
    }
}

impl From<IdentityError> for ApiError {
    fn from(e: IdentityError) -> Self {
        match e {
            IdentityError::UnknownProvider(name) => Self::new(ErrorCode::UnknownProvider, format!("Unknown provider {name}.")),
            IdentityError::InvalidCredentials => Self::unauthorized("Invalid credentials."),
            IdentityError::UnknownSession | IdentityError::ExpiredSession => {
                Self::unauthorized("Authentication required.")
            }
            IdentityError::EmptyInput => Self::bad_request("Provider and credential are required."),
            IdentityError::Provider(_) => Self::unauthorized("Provider rejected the login."),
            other => Self::internal(other.to_string()),
        }
    }
}
