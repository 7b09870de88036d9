//! Error type shared across the crate.

use std::path::PathBuf;

/// Errors produced by instance construction, solvers, and I/O.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    /// An argument violated a documented precondition.
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// A sampled or loaded instance cannot satisfy its own constraints.
    /// Names the (cp, content) pair that triggered the check.
    #[error("infeasible instance at cp {cp}, content {content}: {detail}")]
    InfeasibleInstance {
        cp: usize,
        content: usize,
        detail: String,
    },

    /// A payment allocation problem has an empty feasible set.
    #[error("infeasible allocation: {0}")]
    InfeasibleAllocation(String),

    /// A solver would exceed a hard resource ceiling.
    #[error("resource limit: {0}")]
    ResourceLimit(String),

    /// File I/O failure, with the offending path.
    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    /// JSON (de)serialization failure, with the offending path when known.
    #[error("json error on {path}: {source}")]
    Json {
        path: PathBuf,
        #[source]
        source: serde_json::Error,
    },
}

impl Error {
    pub fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }

    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
