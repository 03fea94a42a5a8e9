use thiserror::Error;

/// Errors produced by this crate.
#[derive(Debug, Error)]
pub enum Error {
    #[error("i/o error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },

    /// Malformed input file (ragged CSV rows, non-numeric fields, ...).
    #[error("format error: {0}")]
    Format(String),

    /// An argument violates a precondition.
    #[error("invalid value: {0}")]
    Value(String),

    /// A dense allocation would exceed the configured cap.
    #[error("size cap exceeded: {0}")]
    Size(String),

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    /// The eigensolver did not converge.
    #[error("eigendecomposition failed to converge: {0}")]
    Convergence(String),

    #[error("arithmetic overflow: {0}")]
    Overflow(String),

    /// A computed feature came out NaN or infinite.
    #[error("non-finite output: {0}")]
    NonFinite(String),

    /// Per-sample failures inside a batch, reported with sample indices.
    #[error("all {total} samples failed; first failure (sample {first_index}): {first_error}")]
    BatchFailed {
        total: usize,
        first_index: usize,
        first_error: String,
    },
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn io(path: impl Into<String>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
