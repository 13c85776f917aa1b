use thiserror::Error;

/// Errors raised by the clockstab toolkit.
///
/// Variants map onto the CLI exit-code families: argument/range/parse/IO
/// problems are input errors, numeric and domain failures are numeric
/// errors, and loop instability gets its own class.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    Argument(String),

    #[error("{what} = {value} outside valid range [{lo}, {hi}]")]
    Range {
        what: &'static str,
        value: f64,
        lo: f64,
        hi: f64,
    },

    #[error("numeric failure: {0}")]
    Numeric(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("loop unstable: {0}")]
    Unstable(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn arg(msg: impl Into<String>) -> Self {
        Error::Argument(msg.into())
    }

    pub(crate) fn range(what: &'static str, value: f64, lo: f64, hi: f64) -> Self {
        Error::Range { what, value, lo, hi }
    }
}
