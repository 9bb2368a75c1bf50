use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("missing parameter `{0}`")]
    MissingParameter(&'static str),

    #[error("zero vector is not allowed here")]
    ZeroVector,

    #[error("{0}")]
    OutOfRange(String),

    #[error("objective returned non-finite value {value} at iteration {k}")]
    NonFinite { k: u64, value: f64 },

    #[error("solution-free stepsize needs a probe value f(z + t s)")]
    MissingProbe,

    #[error("f(z) = {f_z} lies below the declared optimum {f_star}")]
    BelowOptimum { f_z: f64, f_star: f64 },

    #[error("run did not retain {0}")]
    NotRetained(&'static str),

    #[error("line {line}: {message}")]
    Config { line: usize, message: String },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }

    pub(crate) fn config(line: usize, msg: impl Into<String>) -> Self {
        Error::Config { line, message: msg.into() }
    }
}

pub(crate) fn check_dim(expected: usize, got: usize) -> Result<()> {
    if expected != got {
        return Err(Error::DimensionMismatch { expected, got });
    }
    Ok(())
}
