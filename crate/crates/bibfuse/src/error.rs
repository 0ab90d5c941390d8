//! Error type shared across the crate.

use thiserror::Error;

/// Errors produced while parsing input files, validating invariants, or
/// resolving configuration.
#[derive(Debug, Error)]
pub enum Error {
    /// A line of an input file could not be parsed. Carries the 1-based line
    /// number so malformed submissions can be located quickly.
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },

    /// An argument or data structure violated a documented precondition.
    #[error("{0}")]
    InvalidInput(String),

    /// A configuration file or command-line setting could not be resolved.
    #[error("configuration error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    /// A parse failure at a 1-based line number.
    pub fn parse(line: usize, msg: impl Into<String>) -> Self {
        Error::Parse {
            line,
            msg: msg.into(),
        }
    }

    /// Structurally valid input that is semantically unusable.
    pub fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidInput(msg.into())
    }

    /// A bad setting or flag combination.
    pub fn config(msg: impl Into<String>) -> Self {
        Error::Config(msg.into())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
