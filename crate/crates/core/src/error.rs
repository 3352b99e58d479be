use thiserror::Error;

/// Errors raised by the core library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("target cell ({0}, {1}) already holds a module")]
    OccupiedCell(i32, i32),
    #[error("cell ({0}, {1}) is not an available connector")]
    NotAvailable(i32, i32),
    #[error("resource limit exceeded: {0}")]
    ResourceLimit(String),
    #[error("malformed configuration: {0}")]
    MalformedConfig(String),
    #[error("value {value} out of range [{lo}, {hi}] for {what}")]
    OutOfRange { what: &'static str, value: f64, lo: f64, hi: f64 },
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("numerical divergence at t = {t:.4} s: {reason}")]
    NumericalDivergence { t: f64, reason: String },
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
