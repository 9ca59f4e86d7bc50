//! Error taxonomy shared by the library and the CLI.
//!
//! The split mirrors the process exit codes: `Usage` for caller mistakes
//! (bad flags, out-of-range parameters), `Resource` for configured caps
//! (matrix dimension, node count, window memory), and `CheckFailed` for a
//! violated internal identity — an inequality that is a theorem, so tripping
//! it signals a bug, never a condition to ignore.

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// Invalid input from the caller (exit code 2).
    #[error("usage: {0}")]
    Usage(String),

    /// A configured resource cap was exceeded (exit code 3).
    #[error("resource cap: {0}")]
    Resource(String),

    /// An asserted identity or theorem-backed inequality failed beyond its
    /// tolerance (exit code 4). This is a bug signal.
    #[error("internal check failed: {0}")]
    CheckFailed(String),

    /// A numerical routine did not converge within its iteration cap.
    #[error("numerical: {0}")]
    Numerical(String),

    #[error("io: {0}")]
    Io(#[from] std::io::Error),

    #[error("serialize: {0}")]
    Serialize(#[from] serde_json::Error),
}

impl Error {
    pub fn usage(msg: impl Into<String>) -> Self {
        Error::Usage(msg.into())
    }

    pub fn resource(msg: impl Into<String>) -> Self {
        Error::Resource(msg.into())
    }

    pub fn check_failed(msg: impl Into<String>) -> Self {
        Error::CheckFailed(msg.into())
    }

    pub fn numerical(msg: impl Into<String>) -> Self {
        Error::Numerical(msg.into())
    }

    /// Process exit code the CLI maps this error to.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Usage(_) => 2,
            Error::Resource(_) => 3,
            Error::CheckFailed(_) => 4,
            Error::Numerical(_) | Error::Io(_) | Error::Serialize(_) => 1,
        }
    }
}
