use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("numeric failure: {0}")]
    Numeric(String),

    /// Iteration cap reached before the fixed-point residual met the tolerance.
    #[error("no convergence after {iterations} iterations (residual {residual:e})")]
    Convergence {
        iterations: usize,
        residual: f64,
        best: Box<crate::control::ControlParameter>,
    },

    /// `|log K|` is too small for the settling-time sensitivity.
    #[error("contraction {k} is too close to one")]
    NearUnityContraction { k: f64 },

    /// A scenario run stopped early; the trace up to the failure is kept.
    #[error("scenario aborted at period {}: {source}", partial.final_t)]
    Aborted {
        source: Box<Error>,
        partial: Box<crate::closedloop::Trace>,
    },

    #[error("invariant violated: {0}")]
    InvariantViolation(String),

    #[error("config error: {0}")]
    Config(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}: {source}")]
    Csv {
        path: PathBuf,
        #[source]
        source: csv::Error,
    },
}

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidArgument(msg.into())
}
