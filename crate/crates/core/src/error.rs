use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: {left} vs {right}")]
    DimensionMismatch { left: usize, right: usize },

    #[error("exponent mismatch: p = {left} vs p = {right}")]
    ExponentMismatch { left: f64, right: f64 },

    #[error("invalid exponent p = {0}; need 1 < p < inf")]
    InvalidExponent(f64),

    #[error("non-finite coefficient at index {0}")]
    NonFiniteCoefficient(usize),

    #[error("invalid {name}: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("matrix is not symmetric (max |A - A^T| = {0:e})")]
    AsymmetricMatrix(f64),

    #[error("no grid step size accepted within {0} reductions")]
    StepSizeExhausted(u32),

    #[error("not a descent direction: <grad, d> = {0:e}")]
    NotDescentDirection(f64),

    #[error("non-finite {what} at iteration {iter}")]
    NonFiniteEvaluation { what: &'static str, iter: usize },

    #[error("objective `{0}` provides no Hessian action")]
    MissingHessian(String),

    #[error(
        "conjugate gradient stalled after {iters} iterations (relative residual {residual:e})"
    )]
    CgNotConverged { iters: usize, residual: f64 },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("serialization: {0}")]
    Json(#[from] serde_json::Error),

    #[error("{0}")]
    Check(String),
}

impl Error {
    pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
