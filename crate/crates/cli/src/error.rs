use std::fmt;

use nterm_core::Error;
use serde::Serialize;

/// Failure classes, each with its own process exit status.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ErrorKind {
    CertificationFailed,
    Usage,
    WeightSpec,
    InvalidParameter,
    Io,
    Domain,
}

impl ErrorKind {
    pub fn exit_code(self) -> i32 {
        match self {
            ErrorKind::CertificationFailed => 1,
            ErrorKind::Usage => 2,
            ErrorKind::WeightSpec => 3,
            ErrorKind::InvalidParameter => 4,
            ErrorKind::Io => 5,
            ErrorKind::Domain => 6,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CliError {
    #[serde(rename = "error")]
    pub kind: ErrorKind,
    pub code: i32,
    pub message: String,
}

impl CliError {
    pub fn new(kind: ErrorKind, message: impl Into<String>) -> Self {
        CliError {
            kind,
            code: kind.exit_code(),
            message: message.into(),
        }
    }

    pub fn usage(message: impl Into<String>) -> Self {
        Self::new(ErrorKind::Usage, message)
    }

    pub fn parameter(message: impl Into<String>) -> Self {
        Self::new(ErrorKind::InvalidParameter, message)
    }

    /// Single-line JSON for the diagnostic stream.
    pub fn to_json_line(&self) -> String {
        serde_json::to_string(self).expect("error serializes")
    }

    /// Errors raised while loading weights.
    pub fn from_weights(e: Error) -> Self {
        match e {
            Error::Io { .. } => Self::new(ErrorKind::Io, e.to_string()),
            other => Self::new(ErrorKind::WeightSpec, other.to_string()),
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.message)
    }
}

impl std::error::Error for CliError {}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        let kind = match &e {
            Error::InvalidWeights { .. } | Error::UnsupportedFamily(_) => ErrorKind::WeightSpec,
            Error::Parse { what, .. } if what.starts_with("weight") => ErrorKind::WeightSpec,
            Error::Parse { .. } => ErrorKind::InvalidParameter,
            Error::Io { .. } => ErrorKind::Io,
            Error::Domain(_) | Error::Truncated { .. } | Error::Rank(_) | Error::NotApplicable(_) => ErrorKind::Domain,
        };
        CliError::new(kind, e.to_string())
    }
}
