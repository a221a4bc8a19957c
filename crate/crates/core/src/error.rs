use thiserror::Error;

/// Errors produced by the numerical core.
#[derive(Debug, Error)]
pub enum CoreError {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("eigensolve failed: {0}")]
    EigensolveFailed(String),

    #[error("Sturm-Liouville solve failed: {0}")]
    SturmFailed(String),

    #[error("propagation failed: {0}")]
    PropagationFailed(String),

    #[error("tracking failed at t = {t}: {reason}")]
    TrackingFailed { t: f64, reason: String },

    #[error("tracking denominator below guard: {0}")]
    SingularDenominator(String),

    #[error("io: {0}")]
    Io(#[from] std::io::Error),

    #[error("format: {0}")]
    Format(String),
}

pub type Result<T> = std::result::Result<T, CoreError>;
