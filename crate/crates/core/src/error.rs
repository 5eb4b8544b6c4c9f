use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid pmf: {0}")]
    InvalidPmf(String),

    #[error("truncation window [{lo}, {hi}] drops all probability mass")]
    EmptyTruncation { lo: i64, hi: i64 },

    /// Target puts mass on a point the source never produces.
    #[error("weight ratio violated: target mass at point {point} lies outside the source support")]
    WeightRatioViolated { point: i64 },

    #[error("invalid parameter `{name}` = {value}: {reason}")]
    InvalidParameter {
        name: &'static str,
        value: f64,
        reason: &'static str,
    },

    #[error("oracle has no concept attached and cannot emit labels")]
    UnlabeledOracle,

    #[error("estimates are not over a common support")]
    SupportMismatch,

    #[error("rejection plan is degenerate: {0}")]
    DegeneratePlan(&'static str),

    #[error("hypothesis class is empty")]
    EmptyClass,

    #[error("config error in `{field}`: {message}")]
    Config { field: String, message: String },

    #[error("i/o error: {0}")]
    Io(String),
}

impl Error {
    pub(crate) fn param(name: &'static str, value: f64, reason: &'static str) -> Self {
        Error::InvalidParameter {
            name,
            value,
            reason,
        }
    }

    pub fn config(field: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Config {
            field: field.into(),
            message: message.into(),
        }
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}
