use thiserror::Error;

/// Errors raised by the numerical core.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("empty input: {0}")]
    EmptyInput(String),

    #[error("degenerate input: {0}")]
    Degenerate(String),

    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("point {index} lies within {eps:e} of the origin")]
    NearOrigin { index: usize, eps: f64 },

    #[error("covariance is singular (smallest eigenvalue {min_eigenvalue:e})")]
    Rank { min_eigenvalue: f64 },

    #[error("problem size {size} exceeds limit {limit}")]
    Size { size: usize, limit: usize },

    #[error("unsupported dimension {0}")]
    UnsupportedDimension(usize),

    #[error("optimisation diverged at step {step}: {reason}")]
    Divergence { step: usize, reason: String },

    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },
}

pub type Result<T> = std::result::Result<T, Error>;
