use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("domain needs at least 2 distinct values, found {0}")]
    DomainTooSmall(usize),

    #[error("epsilon must be positive and finite, got {0}")]
    InvalidEpsilon(f64),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("dataset is empty")]
    EmptyDataset,

    #[error("value index {index} is outside the domain of size {size}")]
    ValueOutOfDomain { index: usize, size: usize },

    #[error("dimension mismatch: expected {expected}, got {actual}")]
    Dimension { expected: usize, actual: usize },

    #[error("distribution has no positive mass")]
    DegenerateDistribution,

    #[error("cannot split {users} users across {threads} threads")]
    TooManyThreads { threads: usize, users: usize },

    #[error("unknown {kind} '{name}', expected one of: {valid}")]
    UnknownName {
        kind: &'static str,
        name: String,
        valid: String,
    },

    #[error("{0}")]
    Usage(String),

    /// `--help` or `--version`; carries the text to print.
    #[error("{0}")]
    HelpRequested(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// Process exit status used by the command-line front end.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::HelpRequested(_) => 0,
            Error::Usage(_) | Error::UnknownName { .. } => 2,
            Error::Io { .. } | Error::Csv(_) => 3,
            _ => 4,
        }
    }
}
