use thiserror::Error;

/// Errors produced anywhere in the toolkit.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("singular design: {0}")]
    SingularDesign(String),

    #[error("path truncated at lambda {last:.6e}, cannot evaluate lambda {requested:.6e}")]
    PathTruncated { last: f64, requested: f64 },

    #[error("undefined metric: {0}")]
    UndefinedMetric(String),

    #[error("no valid start: {0}")]
    NoValidStart(String),

    #[error("cross-validation failed: {0}")]
    CvFailed(String),

    #[error("degenerate selection: {0}")]
    DegenerateSelection(String),

    #[error("undefined correlation: {0}")]
    UndefinedCorrelation(String),

    #[error("input not found: {0}")]
    InputNotFound(String),

    #[error("malformed input: {0}")]
    MalformedInput(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// Stable, machine-readable identifier for the error variant.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::InvalidArgument(_) => "invalid-argument",
            Error::DimensionMismatch { .. } => "dimension-mismatch",
            Error::SingularDesign(_) => "singular-design",
            Error::PathTruncated { .. } => "path-truncated",
            Error::UndefinedMetric(_) => "undefined-metric",
            Error::NoValidStart(_) => "no-valid-start",
            Error::CvFailed(_) => "cv-failed",
            Error::DegenerateSelection(_) => "degenerate-selection",
            Error::UndefinedCorrelation(_) => "undefined-correlation",
            Error::InputNotFound(_) => "input-not-found",
            Error::MalformedInput(_) => "malformed-input",
            Error::Io(_) => "io",
            Error::Csv(_) => "csv",
            Error::Json(_) => "json",
        }
    }

    /// Whether the error stems from bad user-supplied parameters or input
    /// rather than a failure while computing.
    pub fn is_validation(&self) -> bool {
        matches!(
            self,
            Error::InvalidArgument(_)
                | Error::DimensionMismatch { .. }
                | Error::InputNotFound(_)
                | Error::MalformedInput(_)
                | Error::Csv(_)
                | Error::Json(_)
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::InvalidArgument(msg.into()))
}
