//! Error type shared across the pipeline.

use thiserror::Error;

/// Errors produced by the pipeline stages.
///
/// The variants map onto the process exit codes used by the CLI:
/// usage errors (bad parameters, empty inputs), data errors (schema
/// mismatches, unparsable files), and structural errors (internal
/// dimension mismatches that indicate a bug or a corrupted model).
#[derive(Debug, Error)]
pub enum Error {
    /// Caller asked for something invalid (bad hyperparameter, empty dataset).
    #[error("usage error: {0}")]
    Usage(String),

    /// Input data is malformed or inconsistent with the declared schema.
    #[error("data error: {0}")]
    Data(String),

    /// Column set does not match the scenario schema.
    #[error("schema mismatch for {context}: missing columns {missing:?}, unexpected columns {extra:?}")]
    Schema {
        context: String,
        missing: Vec<String>,
        extra: Vec<String>,
    },

    /// Internal dimension mismatch (sample length vs clause width, etc.).
    #[error("dimension mismatch: {0}")]
    Dimension(String),

    /// Model file is not readable as a supported format/version.
    #[error("model format error: {0}")]
    ModelFormat(String),

    #[error("io error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub fn io(path: impl Into<String>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
