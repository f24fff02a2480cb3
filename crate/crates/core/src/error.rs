use std::io;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("config key `{key}`: {reason}")]
    Config { key: String, reason: String },

    #[error("failed to parse config: {0}")]
    Parse(String),

    #[error("ground state did not converge after {iterations} iterations (residual {residual:.3e})")]
    NoConvergence { iterations: usize, residual: f64 },

    #[error("empty ensemble")]
    EmptyEnsemble,

    #[error("need at least {needed} samples, got {got}")]
    InsufficientSamples { needed: usize, got: usize },

    #[error("{discarded} of {total} trajectories diverged (more than 1%)")]
    Divergence { discarded: usize, total: usize },

    #[error("grid mismatch: {0}")]
    Grid(String),

    #[error("step too coarse: {reason}; try dtau <= {suggested_dtau:.4e}")]
    StepMismatch { reason: String, suggested_dtau: f64 },

    #[error("degenerate input: {0}")]
    Degenerate(String),

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("checkpoint: {0}")]
    Checkpoint(String),

    #[error(transparent)]
    Io(#[from] io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn config(key: &str, reason: impl Into<String>) -> Self {
        Error::Config {
            key: key.to_string(),
            reason: reason.into(),
        }
    }
}
