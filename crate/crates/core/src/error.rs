//! Crate-wide error type.

use thiserror::Error;

/// Errors produced by scoring, testing, simulation and pipeline routines.
#[derive(Debug, Error)]
pub enum Error {
    /// A caller-supplied value violates a precondition.
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// Not enough observations for the requested statistic.
    #[error("insufficient sample: {0}")]
    InsufficientSample(String),

    /// A variance estimate collapsed to zero (constant input).
    #[error("degenerate variance: {0}")]
    DegenerateVariance(String),

    /// An optimizer or numerical routine failed to produce a usable result.
    #[error("numerical failure: {0}")]
    Numerical(String),

    /// Experiment configuration is malformed or inconsistent.
    #[error("config error: {0}")]
    Config(String),

    /// A CSV row could not be parsed.
    #[error("{path}:{line}: {msg}")]
    CsvParse {
        path: String,
        line: usize,
        msg: String,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }

    /// Process exit code for the CLI: 2 for config/input problems, 3 for
    /// numerical failures.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config(_) | Error::CsvParse { .. } | Error::Io(_) | Error::InvalidArgument(_) => 2,
            _ => 3,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
