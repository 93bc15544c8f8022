use thiserror::Error;

/// Errors raised anywhere in the laboratory.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("stencil unavailable at node ({i}, {j}): {reason}")]
    StencilUnavailable { i: usize, j: usize, reason: &'static str },

    #[error("field/grid mismatch: {0}")]
    Mismatch(String),

    #[error("curve is not closed")]
    OpenCurve,

    #[error("curve has {got} samples, need at least {need}")]
    UnderResolved { got: usize, need: usize },

    #[error("resolution error: {0}")]
    Resolution(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("singular linear system: {0}")]
    Singular(String),

    #[error("linear solver stalled after {iterations} iterations (relative residual {relative_residual:e})")]
    LinearSolver { iterations: usize, relative_residual: f64 },

    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("insufficient data: {0}")]
    InsufficientData(String),

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
