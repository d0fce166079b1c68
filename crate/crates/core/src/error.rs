//! Error type shared across the library.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum SolverError {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("matrix is not symmetric: max asymmetry {0:.3e}")]
    NotSymmetric(f64),

    #[error("matrix is not symmetric positive definite: {0}")]
    NotSpd(String),

    #[error("conjugate gradient breakdown at iteration {iteration}: curvature {curvature:.3e}")]
    CgBreakdown { iteration: usize, curvature: f64 },

    #[error("singular operator: {0}")]
    Singular(String),

    #[error("power iteration did not converge within {0} iterations")]
    PowerIterationStalled(usize),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("checkpoint error: {0}")]
    Checkpoint(String),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, SolverError>;
