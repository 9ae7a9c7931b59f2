use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

/// Unified error type for the library and harness.
#[derive(Debug, Error)]
pub enum Error {
    #[error("shape mismatch: {left:?} vs {right:?}")]
    ShapeMismatch { left: Vec<usize>, right: Vec<usize> },

    #[error("element count mismatch: {left} vs {right}")]
    CountMismatch { left: usize, right: usize },

    #[error("layer {layer}: expected input shape {expected:?}, got {actual:?}")]
    ShapeChain {
        layer: usize,
        expected: Vec<usize>,
        actual: Vec<usize>,
    },

    #[error("target class {target} out of range (num_classes = {num_classes})")]
    TargetOutOfRange { target: usize, num_classes: usize },

    #[error("forward trace does not match network: {0}")]
    TraceMismatch(String),

    #[error("non-finite value in {context}")]
    NonFinite { context: String },

    #[error("training diverged at epoch {epoch}, batch {batch}: {detail}")]
    Diverged {
        epoch: usize,
        batch: usize,
        detail: String,
    },

    #[error("{path}: {detail}")]
    Format { path: String, detail: String },

    #[error("invalid argument: {0}")]
    InvalidArg(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("dataset is empty")]
    EmptyDataset,

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn non_finite(context: impl Into<String>) -> Self {
        Error::NonFinite {
            context: context.into(),
        }
    }

    pub(crate) fn format(path: impl Into<String>, detail: impl Into<String>) -> Self {
        Error::Format {
            path: path.into(),
            detail: detail.into(),
        }
    }
}
