//! Crate-wide error type.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameters: {0}")]
    InvalidParams(String),

    #[error("size mismatch: {0}")]
    SizeMismatch(String),

    #[error("problem too large: {0}")]
    TooLarge(String),

    #[error("index out of range: {0}")]
    IndexOutOfRange(String),

    #[error("numerical overflow: {0}")]
    Overflow(String),

    #[error("non-finite input: {0}")]
    NonFinite(String),

    #[error("eigensolver failed at s = {s}")]
    Eigensolver { s: f64 },

    #[error("integrator step size underflow at s = {s}")]
    StepUnderflow { s: f64 },

    #[error("configuration invalid:\n  {}", .0.join("\n  "))]
    Validation(Vec<String>),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
