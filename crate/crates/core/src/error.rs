use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    /// The model adapter could not deliver an output (timeout, broken pipe, bad payload).
    #[error("model transport failure: {0}")]
    Transport(String),

    #[error("model returned a non-finite value for test sample {sample}")]
    NonFinite { sample: usize },

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("objective increased for {0} consecutive iterations; try a smaller learning rate kappa")]
    Divergence(usize),

    #[error("input outside the closed-form regime: {0}")]
    Domain(String),

    #[error("degenerate design: {0}")]
    Degenerate(String),

    #[error("reference set is empty")]
    EmptyReference,

    #[error("variable {index} ({name}) has zero standard deviation")]
    ZeroVariance { index: usize, name: String },

    #[error("score distribution for variable {0} has no finite grid value")]
    EmptyDistribution(usize),

    #[error("metric undefined: {0}")]
    Undefined(String),

    #[error("{path}: row {row}, column {column}: {message}")]
    Parse {
        path: String,
        row: usize,
        column: usize,
        message: String,
    },

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}
