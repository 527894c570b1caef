//! Crate-wide error type.

use std::path::PathBuf;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("io error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("manifest line {line}: {message}")]
    ManifestParse { line: usize, message: String },

    #[error("record '{record}': {message}")]
    RecordInvalid { record: String, message: String },

    #[error("image '{path}': {message}")]
    Image { path: PathBuf, message: String },

    #[error("grid too fine: block side {block} below minimum 3")]
    GridTooFine { block: u32 },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("not enough samples: need {need}, have {have}")]
    TooFewSamples { need: usize, have: usize },

    #[error("no detections: descriptor set has no regions")]
    NoDetections,

    #[error("histogram intersection kernel requires non-negative features")]
    NegativeHistogram,

    #[error("kernel matrix is not symmetric (max asymmetry {0:.3e})")]
    AsymmetricKernel(f64),

    #[error("degenerate labels: {0}")]
    DegenerateLabels(String),

    #[error("bad file format: {0}")]
    Format(String),
}

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
