use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid image: {0}")]
    InvalidImage(String),

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: String, found: String },

    #[error("inverse DFT left an imaginary residue of {residual:.3e} (relative L2); multiplier is not Hermitian")]
    NonRealOutput { residual: f64 },

    #[error("{path}: bad magic number {found:#010x}, expected {expected:#010x}")]
    BadMagic {
        path: PathBuf,
        expected: u32,
        found: u32,
    },

    #[error("{path}: truncated payload, expected {expected} bytes but found {found}")]
    Truncated {
        path: PathBuf,
        expected: usize,
        found: usize,
    },

    #[error("image file holds {images} items but label file holds {labels}")]
    CountMismatch { images: usize, labels: usize },

    #[error("unsupported image format: {0}")]
    UnsupportedFormat(String),

    #[error("inconsistent dimensions: {0}")]
    InconsistentDimensions(String),

    #[error("empty foreground: no pixel reaches threshold {threshold}")]
    EmptyForeground { threshold: f64 },

    #[error("degenerate size: {0}")]
    DegenerateSize(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("invalid Riesz order: {0}")]
    InvalidOrder(String),

    #[error("incomplete multi-index set for order {order}: missing {missing}")]
    IncompleteOrder { order: u32, missing: String },

    #[error("empty input: {0}")]
    Empty(String),

    #[error("class {class} has too few samples ({count})")]
    TooFewSamples { class: usize, count: usize },

    #[error("training data holds a single class; at least two are required")]
    SingleClass,

    #[error("model file: {0}")]
    ModelFormat(String),

    #[error("feature table: {0}")]
    FeatureTable(String),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub(crate) fn mismatch(expected: impl ToString, found: impl ToString) -> Error {
    Error::DimensionMismatch {
        expected: expected.to_string(),
        found: found.to_string(),
    }
}
