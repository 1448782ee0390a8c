use thiserror::Error;

/// Errors raised by the numerical routines.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("operator is not Hermitian (max deviation {0:e})")]
    NotHermitian(f64),
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("non-finite value in {0}")]
    NonFinite(&'static str),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("singular configuration: {0}")]
    Singular(String),
    #[error("outside model regime: {0}")]
    Regime(String),
    #[error("integration failed: {0}")]
    Convergence(String),
    #[error("domain error: {0}")]
    Domain(String),
    #[error("Fisher information is infinite at P = {0}")]
    InfiniteInformation(f64),
}

pub type Result<T> = std::result::Result<T, Error>;

