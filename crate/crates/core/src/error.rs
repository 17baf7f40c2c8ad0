use thiserror::Error;

/// Errors raised by the library. The CLI maps each variant to an exit code.
#[derive(Debug, Error)]
pub enum Error {
    #[error("unknown space token `{0}`")]
    Catalog(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("precision error: {0}")]
    Precision(String),

    /// A scan was asked to run below the resolution needed to resolve its
    /// integrand; `required` lists the minima as `name=value` pairs.
    #[error("resolution too low: {what}; required minima: {required}")]
    Resolution { what: String, required: String },

    #[error("cannot fit exponent: {0}")]
    UndefinedFit(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    pub(crate) fn resolution(what: impl Into<String>, required: impl Into<String>) -> Self {
        Error::Resolution {
            what: what.into(),
            required: required.into(),
        }
    }
}
