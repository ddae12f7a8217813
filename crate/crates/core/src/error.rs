use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("insufficient data: {0}")]
    InsufficientData(String),

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    /// A kernel failed numerically. Carries the sweep (when known) and the
    /// segment whose system could not be factorized.
    #[error("numerical failure in segment {segment}{}: {detail}", sweep.map(|s| format!(" at sweep {s}")).unwrap_or_default())]
    Numerical {
        sweep: Option<usize>,
        segment: usize,
        detail: String,
    },
}

impl Error {
    pub fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    pub fn config(msg: impl Into<String>) -> Self {
        Error::Config(msg.into())
    }

    pub(crate) fn at_sweep(self, sweep: usize) -> Self {
        match self {
            Error::Numerical { segment, detail, .. } => Error::Numerical {
                sweep: Some(sweep),
                segment,
                detail,
            },
            other => other,
        }
    }

    pub fn is_numerical(&self) -> bool {
        matches!(self, Error::Numerical { .. })
    }
}

pub type Result<T> = std::result::Result<T, Error>;
