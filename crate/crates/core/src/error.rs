use thiserror::Error;

/// Errors produced by samplers, diagnostics, and the run harness.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid dimension {got}: must be at least {min}")]
    InvalidDimension { got: usize, min: usize },

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("degenerate state: {0}")]
    DegenerateState(String),

    #[error("degenerate point: {0}")]
    DegeneratePoint(String),

    #[error("unsupported operation: {0}")]
    Unsupported(String),

    #[error("trace too short: need at least {min} states, got {got}")]
    TraceTooShort { got: usize, min: usize },

    #[error("empty trace")]
    EmptyTrace,

    #[error("constant series has no finite autocorrelation time")]
    ConstantSeries,

    #[error("corrupt trace file `{path}`: {reason}")]
    CorruptTrace { path: String, reason: String },

    #[error("I/O error on `{path}`: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },

    #[error("config error: {0}")]
    Config(String),
}

impl Error {
    pub fn invalid_parameter(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }

    /// NaN-safe validation: accepts strictly positive finite values only.
    pub(crate) fn ensure_positive(name: &'static str, v: f64) -> Result<()> {
        if v > 0.0 && v.is_finite() {
            Ok(())
        } else {
            Err(Error::invalid_parameter(
                name,
                format!("must be positive and finite, got {v}"),
            ))
        }
    }

    /// NaN-safe validation: accepts finite values at or above zero.
    pub(crate) fn ensure_nonnegative(name: &'static str, v: f64) -> Result<()> {
        if v >= 0.0 && v.is_finite() {
            Ok(())
        } else {
            Err(Error::invalid_parameter(
                name,
                format!("must be nonnegative and finite, got {v}"),
            ))
        }
    }

    /// True for errors caused by a bad configuration or usage, as opposed to
    /// runtime numeric failures. The CLI maps these to exit code 2.
    pub fn is_usage(&self) -> bool {
        matches!(
            self,
            Error::Config(_)
                | Error::InvalidParameter { .. }
                | Error::InvalidDimension { .. }
                | Error::DimensionMismatch { .. }
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;
