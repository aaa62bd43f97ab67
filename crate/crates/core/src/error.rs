use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    /// Weight sequence is not of the form `1 <= w_1 <= w_2 <= ...`.
    /// `index` is 1-based.
    #[error("invalid weights at index {index}: {reason}")]
    InvalidWeights { index: usize, reason: String },

    /// A tabulated weight sequence was asked for an index past its end.
    #[error("tabulated weights hold {available} entries but {requested} are required")]
    Truncated { available: usize, requested: usize },

    #[error("operation not supported for {0} weights")]
    UnsupportedFamily(&'static str),

    #[error("rank-deficient regression design: {0}")]
    Rank(String),

    #[error("not applicable: {0}")]
    NotApplicable(String),

    #[error("cannot parse {what} from {input:?}: {reason}")]
    Parse {
        what: &'static str,
        input: String,
        reason: String,
    },

    #[error("i/o error on {path}: {message}")]
    Io { path: String, message: String },
}

impl Error {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    pub(crate) fn parse(what: &'static str, input: &str, reason: impl Into<String>) -> Self {
        Error::Parse {
            what,
            input: input.to_string(),
            reason: reason.into(),
        }
    }
}
