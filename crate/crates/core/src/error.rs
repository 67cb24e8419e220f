//! Unified error type for the pipeline.

use thiserror::Error;

/// Convenience alias used across the crate.
pub type Result<T, E = Error> = core::result::Result<T, E>;

/// Everything that can go wrong between a raw file and a finished report.
#[derive(Debug, Error)]
pub enum Error {
    /// A data file row could not be interpreted.
    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    /// Input data violates a structural invariant.
    #[error("invalid input: {0}")]
    Structure(String),

    /// A configuration value is outside its valid range.
    #[error("invalid configuration: {0}")]
    Config(String),

    /// A filter cannot be designed from the requested parameters.
    #[error("filter design: {0}")]
    Design(String),

    /// An operation was invoked outside its contract.
    #[error("usage: {0}")]
    Usage(String),

    /// Beat detection found too few peaks.
    #[error("detection: {0}")]
    Detection(String),

    /// Reference/candidate alignment produced no usable matches.
    #[error("alignment: {0}")]
    Alignment(String),

    /// Every candidate in a cutoff sweep failed.
    #[error("sweep: {0}")]
    Sweep(String),

    /// Underlying I/O failure.
    #[error("i/o: {0}")]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn parse(line: usize, message: impl Into<String>) -> Self {
        Error::Parse {
            line,
            message: message.into(),
        }
    }

    pub(crate) fn structure(message: impl Into<String>) -> Self {
        Error::Structure(message.into())
    }

    pub(crate) fn config(message: impl Into<String>) -> Self {
        Error::Config(message.into())
    }

    pub(crate) fn design(message: impl Into<String>) -> Self {
        Error::Design(message.into())
    }

    pub(crate) fn usage(message: impl Into<String>) -> Self {
        Error::Usage(message.into())
    }

    pub(crate) fn detection(message: impl Into<String>) -> Self {
        Error::Detection(message.into())
    }

    pub(crate) fn alignment(message: impl Into<String>) -> Self {
        Error::Alignment(message.into())
    }

    /// Stable machine-readable tag for each error class.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::Parse { .. } => "parse",
            Error::Structure(_) => "structure",
            Error::Config(_) => "config",
            Error::Design(_) => "design",
            Error::Usage(_) => "usage",
            Error::Detection(_) => "detection",
            Error::Alignment(_) => "alignment",
            Error::Sweep(_) => "sweep",
            Error::Io(_) => "io",
        }
    }

    /// Prefixes the message with the statistic or stage that failed.
    pub(crate) fn labeled(self, label: &str) -> Self {
        match self {
            Error::Parse { line, message } => Error::Parse {
                line,
                message: format!("{label}: {message}"),
            },
            Error::Structure(m) => Error::Structure(format!("{label}: {m}")),
            Error::Config(m) => Error::Config(format!("{label}: {m}")),
            Error::Design(m) => Error::Design(format!("{label}: {m}")),
            Error::Usage(m) => Error::Usage(format!("{label}: {m}")),
            Error::Detection(m) => Error::Detection(format!("{label}: {m}")),
            Error::Alignment(m) => Error::Alignment(format!("{label}: {m}")),
            Error::Sweep(m) => Error::Sweep(format!("{label}: {m}")),
            Error::Io(e) => Error::Io(e),
        }
    }
}
