use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// An input left its admissible domain.
    #[error("domain error in `{field}`: {reason}")]
    Domain { field: &'static str, reason: String },

    /// The integrator could not keep the norm (or unitarity) within budget.
    #[error("integration error: norm drift {drift:.3e} exceeds tolerance {tolerance:.3e}; reduce the step (raise steps_per_fast_period or lower dt_max)")]
    Integration { drift: f64, tolerance: f64 },

    #[error("config error at `{key}`: {reason}")]
    Config { key: String, reason: String },

    #[error("io error: {0}")]
    Io(String),
}

impl Error {
    pub(crate) fn domain(field: &'static str, reason: impl Into<String>) -> Self {
        Error::Domain { field, reason: reason.into() }
    }

    /// Short machine-readable tag, e.g. for `error[config]: ...`.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::Domain { .. } => "domain",
            Error::Integration { .. } => "integration",
            Error::Config { .. } => "config",
            Error::Io(_) => "io",
        }
    }

    /// Process exit status for this error.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Integration { .. } => 2,
            Error::Io(_) => 3,
            Error::Domain { .. } | Error::Config { .. } => 1,
        }
    }

    pub(crate) fn config(key: impl Into<String>, reason: impl Into<String>) -> Self {
        Error::Config { key: key.into(), reason: reason.into() }
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
