use thiserror::Error;

/// Errors produced by the model, samplers and data handling.
#[derive(Debug, Error)]
pub enum Error {
    /// An argument lies outside the domain of the function.
    #[error("domain error: {0}")]
    Domain(String),

    /// Invalid hyperparameters, schedules or generator specs.
    #[error("configuration error: {0}")]
    Config(String),

    /// Malformed or invalid survival data.
    #[error("data error: {0}")]
    Data(String),

    /// Malformed row in a data file.
    #[error("data error at line {line}: {message}")]
    Parse { line: u64, message: String },

    /// Floating point underflow or other numerical breakdown.
    #[error("numeric failure: {0}")]
    Numeric(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn domain<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Domain(msg.into()))
}
