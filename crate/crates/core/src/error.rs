use std::path::PathBuf;

use thiserror::Error;

/// Errors surfaced by the planner, environments and harness.
#[derive(Debug, Error)]
pub enum Error {
    /// An argument lies outside the domain of the operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// A spline or dense trajectory violates its structural invariants.
    #[error("invalid trajectory: {0}")]
    InvalidTrajectory(String),

    /// A configuration value is missing, malformed or out of range.
    #[error("config error: {0}")]
    Config(String),

    /// An index lies outside a precomputed table.
    #[error("index out of bounds: {0}")]
    Bounds(String),

    #[error("dimension mismatch: expected {expected}, got {got} ({context})")]
    Dimension {
        expected: usize,
        got: usize,
        context: &'static str,
    },

    /// Every candidate rollout failed, so no weights can be formed.
    #[error("planning failure: all rollouts failed")]
    PlanningFailure,

    #[error("i/o error at {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("serialization error: {0}")]
    Serialization(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}

pub(crate) fn check_dim(expected: usize, got: usize, context: &'static str) -> Result<()> {
    if expected == got {
        Ok(())
    } else {
        Err(Error::Dimension {
            expected,
            got,
            context,
        })
    }
}
