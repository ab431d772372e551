use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("{what} out of range: {detail}")]
    Range { what: &'static str, detail: String },

    #[error("invalid spin-bath specification: {0}")]
    InvalidSpec(String),

    #[error("contract violation: {0}")]
    Contract(String),

    #[error("basis mismatch: {0}")]
    BasisMismatch(String),

    #[error("constraints infeasible at tolerance {tol:e}; residuals: {residuals:?}")]
    Infeasible { tol: f64, residuals: Vec<f64> },

    #[error("no convergence after {iterations} iterations (last residual {last:e})")]
    NoConvergence {
        iterations: usize,
        last: f64,
        history: Vec<f64>,
    },

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("singular detuning: F must be nonzero")]
    SingularDetuning,

    #[error("dimension {dim} exceeds limit {limit}")]
    DimensionOverflow { dim: usize, limit: usize },

    #[error("parse error: {0}")]
    Parse(String),
}

pub(crate) fn range(what: &'static str, detail: impl Into<String>) -> Error {
    Error::Range {
        what,
        detail: detail.into(),
    }
}
