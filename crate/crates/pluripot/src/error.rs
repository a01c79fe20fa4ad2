//! Error type shared by the library.

use thiserror::Error;

/// Failures reported by library operations.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("invalid argument: {0}")]
    Argument(String),
    #[error("invalid grid: {0}")]
    Grid(String),
    #[error("{what} is not positive definite (smallest eigenvalue {eigenvalue:e})")]
    NotPositive { what: String, eigenvalue: f64 },
    #[error("psh cone violated at grid point {point}: smallest eigenvalue {eigenvalue:e}")]
    Cone { point: usize, eigenvalue: f64 },
    #[error("non-finite values in {0}")]
    NonFinite(String),
    #[error("scenario build failed, parameter `{param}`: {reason}")]
    Build { param: String, reason: String },
    #[error("Newton scheme failed at beta = {beta}: residual {residual:e} after {iterations} iterations")]
    Scheme {
        beta: f64,
        residual: f64,
        iterations: usize,
    },
    #[error("{solver} did not converge: residual {residual:e} after {iterations} iterations")]
    NotConverged {
        solver: String,
        residual: f64,
        iterations: usize,
    },
    #[error("field file: {0}")]
    Format(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

/// Library result alias.
pub type Result<T> = std::result::Result<T, Error>;
