use thiserror::Error;

/// Errors raised by the model, metrics, design and probe layers.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// A numeric argument is outside the supported envelope.
    #[error("domain error: {0}")]
    Domain(String),

    /// A device description violates its structural invariants (odd channel
    /// count, mismatched per-channel arrays, ...).
    #[error("invalid specification: {0}")]
    Specification(String),

    /// Matrix shapes do not fit the requested operation.
    #[error("dimension mismatch: {0}")]
    Dimension(String),

    /// A metric is undefined for the given input (e.g. a zero matrix).
    #[error("undefined metric: {0}")]
    UndefinedMetric(String),

    /// A 1-D search bracket does not contain an interior maximum.
    #[error("bracket error: {0}")]
    Bracket(String),

    /// Reconstruction cannot identify a parameter from the supplied data.
    #[error("degenerate reconstruction: {0}")]
    Degenerate(String),

    /// A run configuration failed validation; `path` names the offending key.
    #[error("config error at `{path}`: {message}")]
    Config { path: String, message: String },
}

impl Error {
    pub(crate) fn config(path: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Config {
            path: path.into(),
            message: message.into(),
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
