use std::path::PathBuf;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("invalid dataset: {0}")]
    InvalidDataset(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },

    #[error("kernel span {span} exceeds padded series length {padded}")]
    KernelTooLong { span: usize, padded: usize },

    #[error("series too short: length {length}, need at least {required}")]
    SeriesTooShort { length: usize, required: usize },

    #[error("empty input")]
    EmptyInput,

    #[error("degenerate input: {0}")]
    Degenerate(String),

    #[error("non-finite objective during optimisation at iteration {iteration}")]
    NonFiniteLoss { iteration: usize },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// Short machine-readable tag for the error kind.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::Parse { .. } => "parse",
            Error::InvalidDataset(_) => "invalid_dataset",
            Error::InvalidArgument(_) => "invalid_argument",
            Error::DimensionMismatch { .. } => "dimension_mismatch",
            Error::KernelTooLong { .. } => "kernel_too_long",
            Error::SeriesTooShort { .. } => "series_too_short",
            Error::EmptyInput => "empty_input",
            Error::Degenerate(_) => "degenerate",
            Error::NonFiniteLoss { .. } => "non_finite_loss",
            Error::Io { .. } => "io",
            Error::Json(_) => "json",
            Error::Csv(_) => "csv",
        }
    }
}
