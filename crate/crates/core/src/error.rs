use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("truncated input: need {needed} bytes, got {got}")]
    TruncatedInput { needed: usize, got: usize },

    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("sample index {index} out of range for record of length {len}")]
    OutOfRange { index: usize, len: usize },

    #[error("input too short: need at least {needed} samples, got {got}")]
    TooShort { needed: usize, got: usize },

    #[error("bad configuration: {0}")]
    BadConfig(String),

    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),

    #[error("solver did not converge within {iterations} iterations{}", context.as_deref().map(|c| format!(" ({c})")).unwrap_or_default())]
    MaxIterations {
        iterations: usize,
        context: Option<String>,
    },

    #[error("not enough data: need {needed}, got {got}")]
    NotEnoughData { needed: usize, got: usize },

    #[error("degenerate input: {0}")]
    DegenerateInput(String),

    #[error("corrupt file: {0}")]
    CorruptFile(String),

    #[error("training data contains a single class")]
    SingleClass,

    #[error("class {class} has {count} members, need at least {needed}")]
    TooFewPerClass {
        class: String,
        count: usize,
        needed: usize,
    },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn shape(msg: impl Into<String>) -> Self {
        Error::ShapeMismatch(msg.into())
    }

    pub(crate) fn config(msg: impl Into<String>) -> Self {
        Error::BadConfig(msg.into())
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// True for errors caused by invalid configuration or arguments, as
    /// opposed to problems with the data being processed.
    pub fn is_validation(&self) -> bool {
        matches!(self, Error::BadConfig(_))
    }
}
