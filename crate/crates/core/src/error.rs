use thiserror::Error;

use crate::term::ParseError;

/// Errors raised by runtime operations. The REST layer maps each variant
/// onto an HTTP status.
#[derive(Debug, Error)]
pub enum MasError {
    #[error("{kind} `{name}` not found")]
    NotFound { kind: &'static str, name: String },
    #[error("{kind} `{name}` already exists")]
    Conflict { kind: &'static str, name: String },
    #[error("parse error at {0}")]
    Parse(#[from] ParseError),
    #[error("invalid specification: {0}")]
    InvalidSpec(String),
    #[error("unsupported performative `{0}`")]
    UnsupportedPerformative(String),
    #[error("precondition failed: {0}")]
    Precondition(String),
    #[error("role `{role}` in group `{group}` already has its maximum of {max} players")]
    CardinalityExceeded { group: String, role: String, max: u32 },
    #[error("agent `{agent}` is not committed to a mission containing goal `{goal}`")]
    NotCommitted { agent: String, goal: String },
    #[error("operation failed: {0}")]
    OpFailure(String),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

impl MasError {
    pub fn not_found(kind: &'static str, name: impl Into<String>) -> Self {
        MasError::NotFound { kind, name: name.into() }
    }

    pub fn conflict(kind: &'static str, name: impl Into<String>) -> Self {
        MasError::Conflict { kind, name: name.into() }
    }
}

pub type Result<T, E = MasError> = std::result::Result<T, E>;
