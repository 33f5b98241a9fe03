use thiserror::Error;

/// Errors produced by the library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid dimension {0}: must be at least 1")]
    InvalidDimension(usize),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("empty request: {0}")]
    Empty(&'static str),

    #[error("invalid density: {0}")]
    InvalidDensity(String),

    #[error("invalid certificate: {0}")]
    InvalidCertificate(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("non-finite value in {0}")]
    NonFinite(&'static str),

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("quadrature step {step} too coarse for |omega| up to {omega_max} (need step <= {limit})")]
    Resolution { step: f64, omega_max: f64, limit: f64 },

    #[error("frequency grid too narrow: edge value is {ratio:.3e} of the interior maximum (limit {limit})")]
    GridTooNarrow { ratio: f64, limit: f64 },

    #[error("trajectory diverged at t = {time}")]
    Unstable { time: f64 },

    #[error("fit failed: {0}")]
    FitFailed(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
