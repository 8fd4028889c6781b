//! Crate-wide error type.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("invalid parameter: {0}")]
    InvalidParam(String),

    #[error("weight must be strictly positive and finite ({0})")]
    BadWeight(String),

    #[error("domain too small for this height: {0}")]
    DomainTooSmall(String),

    #[error("degenerate moment system (condition number {cond:.3e})")]
    DegenerateMoments { cond: f64 },

    #[error("internal invariant violated: {0}")]
    Internal(String),

    #[error("height range too small: {0}")]
    HeightRange(String),

    #[error("finite decomposition: increase K ({0})")]
    IncreaseK(String),

    #[error("unknown name: {0}")]
    UnknownName(String),

    #[error("config error: {0}")]
    Config(String),

    #[error("baseline regression: {0}")]
    Regression(String),

    #[error("non-finite value in {0}")]
    NonFinite(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error("serialization: {0}")]
    Serde(String),
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Serde(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
