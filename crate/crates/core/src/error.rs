use thiserror::Error;

/// Everything that can go wrong inside the library.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("zero vector cannot be normalized")]
    ZeroVector,
    #[error("basis is not orthonormal: {0}")]
    Basis(String),
    #[error("parse error: {0}")]
    Parse(String),
    #[error("schema error: {0}")]
    Schema(String),
    #[error("not found: {0}")]
    NotFound(String),
    #[error("matrix is not unitary: {0}")]
    Unitarity(String),
    #[error("numerical instability: {0}")]
    NumericalInstability(String),
    #[error("invalid mode: {0}")]
    InvalidMode(String),
    #[error("invalid instrument: {0}")]
    Instrument(String),
    #[error("instance too large: {0}")]
    TooLarge(String),
}

pub type Result<T> = std::result::Result<T, Error>;
