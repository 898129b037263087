//! Crate-wide error type.

use std::fmt;

/// Errors surfaced by the library. Numerical kernels, the model, IO, and the
/// engine all share this enum; variants carry a human-readable description of
/// the offending field or precondition.
#[derive(Debug)]
pub enum Error {
    /// Dimension mismatch in a kernel or model call.
    Shape(String),
    /// Sequence longer than the model context, or an empty input where one is required.
    Length(String),
    /// A stated precondition was violated (e.g. empty response span).
    Precondition(String),
    /// Invalid configuration value (rank too large, unknown target name, ...).
    Config(String),
    /// Checkpoint or report file is malformed; the message names the field.
    Format(String),
    /// A dataset line failed to parse.
    DataLine { line: usize, msg: String },
    /// An API contract was broken by the caller (e.g. unscored candidate).
    Contract(String),
    Io(std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::Shape(m) => write!(f, "shape error: {m}"),
            Error::Length(m) => write!(f, "length error: {m}"),
            Error::Precondition(m) => write!(f, "precondition violated: {m}"),
            Error::Config(m) => write!(f, "config error: {m}"),
            Error::Format(m) => write!(f, "format error: {m}"),
            Error::DataLine { line, msg } => write!(f, "line {line}: {msg}"),
            Error::Contract(m) => write!(f, "contract error: {m}"),
            Error::Io(e) => write!(f, "io error: {e}"),
        }
    }
}

impl std::error::Error for Error {
    fn source(&self) -> Option<&(dyn std::error::Error + 'static)> {
        match self {
            Error::Io(e) => Some(e),
            _ => None,
        }
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e)
    }
}
