use std::path::PathBuf;

use thiserror::Error;

use crate::dataset::Feature;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("example {index} is missing feature `{feature}`")]
    MissingFeature { feature: Feature, index: usize },

    #[error("feature `{feature}` has zero variance; cannot standardize")]
    DegenerateScale { feature: Feature },

    #[error("feature mismatch: expected [{expected}], found [{found}]")]
    FeatureMismatch { expected: String, found: String },

    #[error("dataset of {n} examples is too small for split {train}/{validation}/{test}")]
    SplitTooSmall {
        n: usize,
        train: usize,
        validation: usize,
        test: usize,
    },

    #[error("dataset is empty")]
    EmptyDataset,

    #[error("{what} out of range: {value}")]
    OutOfRange { what: &'static str, value: f64 },

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("covariance matrix is not positive definite (last jitter tried: {jitter:e})")]
    NotPositiveDefinite { jitter: f64 },

    #[error("closed-form threshold requires positive correlation, got rho = {rho}")]
    UnsupportedCorrelation { rho: f64 },

    #[error("insufficient features for decision: `{0}` is required")]
    InsufficientFeatures(Feature),

    #[error("training diverged at epoch {epoch} (non-finite loss)")]
    Divergence { epoch: usize },

    #[error("normal equations are singular")]
    Singular,

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },

    #[error("model selection failed: every candidate diverged")]
    SelectionFailed,

    #[error("report has no rows")]
    EmptyReport,

    #[error("{}:{line}: {msg}", path.display())]
    Parse {
        path: PathBuf,
        line: usize,
        msg: String,
    },

    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("model file: {0}")]
    ModelFormat(String),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
