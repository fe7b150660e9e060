use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("dataset layout error, missing: {}", .missing.join(", "))]
    MissingPaths { missing: Vec<String> },

    #[error("schema error: {message}; available headers: [{}]", .available.join(", "))]
    Schema {
        message: String,
        available: Vec<String>,
    },

    #[error("malformed input: {0}")]
    Parse(String),

    #[error("split error: {0}")]
    Split(String),

    #[error("vocabulary error: {0}")]
    Vocabulary(String),

    #[error("training error: {0}")]
    Training(String),

    #[error("dimension mismatch: model expects {expected} features, matrix has {actual}")]
    DimensionMismatch { expected: usize, actual: usize },

    #[error("length mismatch: {left} true labels vs {right} predictions")]
    LengthMismatch { left: usize, right: usize },

    #[error("class id {id} out of range for {num_classes} classes")]
    ClassOutOfRange { id: usize, num_classes: usize },

    #[error("undefined metric: {0}")]
    UndefinedMetric(String),

    #[error("config error: {0}")]
    Config(String),

    #[error("serialization error: {0}")]
    Serde(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
