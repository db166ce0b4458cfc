use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// A configuration value violates its invariant; `field` names it.
    #[error("invalid configuration: {field}: {reason}")]
    Config { field: &'static str, reason: String },

    /// An API was called with arguments outside its contract.
    #[error("usage error: {0}")]
    Usage(String),

    #[error("node {node} has no neighbouring anchor and cannot be localized")]
    Unlocalizable { node: usize },

    /// Non-finite or otherwise malformed numeric input.
    #[error("invalid input: {0}")]
    Input(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("fisher information is singular at the query point")]
    SingularFim,

    #[error("serialization: {0}")]
    Serialization(String),
}

impl Error {
    pub(crate) fn config(field: &'static str, reason: impl Into<String>) -> Self {
        Error::Config {
            field,
            reason: reason.into(),
        }
    }
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Serialization(e.to_string())
    }
}
