//! Error type shared across the crate.

use std::fmt;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug)]
pub enum Error {
    /// A tensor had an unexpected shape. Carries the operation name, the
    /// expected shape and the offending shape.
    ShapeMismatch {
        op: &'static str,
        expected: String,
        got: String,
    },
    /// A value that must be finite was NaN or infinite.
    NonFinite { what: String },
    /// An argument was outside its documented domain.
    InvalidArgument { what: String },
    /// A data file violated its schema. Carries the 1-based line number
    /// and the field (or a short description) that failed.
    Schema {
        path: String,
        line: usize,
        field: String,
        message: String,
    },
    /// Configuration file or flag error.
    Config { message: String },
    Io(std::io::Error),
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::ShapeMismatch { op, expected, got } => {
                write!(f, "{op}: shape mismatch, expected {expected}, got {got}")
            }
            Error::NonFinite { what } => write!(f, "non-finite value in {what}"),
            Error::InvalidArgument { what } => write!(f, "invalid argument: {what}"),
            Error::Schema {
                path,
                line,
                field,
                message,
            } => write!(f, "{path}:{line}: field `{field}`: {message}"),
            Error::Config { message } => write!(f, "config error: {message}"),
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

impl Error {
    pub fn non_finite(what: impl Into<String>) -> Self {
        Error::NonFinite { what: what.into() }
    }

    pub fn invalid(what: impl Into<String>) -> Self {
        Error::InvalidArgument { what: what.into() }
    }

    pub fn config(message: impl Into<String>) -> Self {
        Error::Config {
            message: message.into(),
        }
    }
}
