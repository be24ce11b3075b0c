use thiserror::Error;

/// Errors produced by channel construction, geometry, fitting, and I/O.
#[derive(Debug, Error)]
pub enum QptError {
    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("invalid argument: {0}")]
    Invalid(String),

    #[error("matrix is not completely positive: min eigenvalue {0}")]
    NotCompletelyPositive(f64),

    #[error("matrix is not unitary: defect {0}")]
    NotUnitary(f64),

    #[error("no convergence: {0}")]
    NoConvergence(String),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("serialization error: {0}")]
    Json(#[from] serde_json::Error),

    #[error("malformed file: {0}")]
    Format(String),
}

pub type Result<T> = std::result::Result<T, QptError>;
