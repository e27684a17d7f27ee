use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("matrix is not symmetric (max asymmetry {0:e})")]
    NotSymmetric(f64),

    #[error("singular system: {0}")]
    Singular(String),

    #[error("matrix is numerically singular (condition number {cond:e})")]
    IllConditioned { cond: f64 },

    #[error("vertex {0} is isolated (zero degree)")]
    IsolatedVertex(usize),

    #[error("graph is disconnected: {0}")]
    Disconnected(String),

    #[error("vertex {0} has no out-links")]
    DanglingVertex(usize),

    #[error("matrix has no nonzero entry")]
    ZeroMatrix,

    #[error("no convergence after {iterations} iterations: {what}")]
    NoConvergence { what: String, iterations: usize },

    #[error("size guard violated: {0}")]
    SizeGuard(String),

    #[error("row {row}: {source}")]
    Row {
        row: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("parse error: {0}")]
    Parse(String),
}

impl Error {
    /// True for failures of the numerics (exit code 2), false for bad input or usage (exit code 1).
    pub fn is_numerical(&self) -> bool {
        match self {
            Error::Singular(_)
            | Error::IllConditioned { .. }
            | Error::IsolatedVertex(_)
            | Error::Disconnected(_)
            | Error::DanglingVertex(_)
            | Error::ZeroMatrix
            | Error::NoConvergence { .. } => true,
            Error::Row { source, .. } => source.is_numerical(),
            _ => false,
        }
    }

    pub(crate) fn dim(msg: impl Into<String>) -> Self {
        Error::Dimension(msg.into())
    }

    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidInput(msg.into())
    }
}
