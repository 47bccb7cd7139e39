use std::path::PathBuf;

use thiserror::Error;

/// Errors produced by samplers, kernels and experiments.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("quadrature did not converge ({what}): estimated error {error_estimate:.3e} after {evaluations} evaluations")]
    Quadrature {
        what: String,
        error_estimate: f64,
        evaluations: usize,
    },

    #[error("non-finite drift value {value} at step {step} (state {state:?})")]
    NonFiniteDrift {
        step: usize,
        state: Vec<f64>,
        value: f64,
    },

    #[error("grid mismatch: {0}")]
    Grid(String),

    #[error("estimator unstable: {0}")]
    Unstable(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("serialization: {0}")]
    Serialize(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

pub(crate) fn invalid<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::InvalidParameter(msg.into()))
}
