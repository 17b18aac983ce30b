use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// An argument lies outside the domain of the function.
    #[error("domain error: {0}")]
    Domain(String),

    /// The requested trade-off point cannot be reached for this geometry.
    #[error("infeasible: {what}; feasible interval is [{lo}, {hi}]")]
    Infeasible { what: String, lo: f64, hi: f64 },

    #[error("root finder did not converge: {0}")]
    NoConvergence(String),

    #[error("input too large: {0}")]
    TooLarge(String),

    #[error("empty input: {0}")]
    Empty(String),

    #[error("malformed data: {0}")]
    Format(String),

    #[error("invariant violated: {0}")]
    Invariant(String),

    #[error("io: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn domain<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Domain(msg.into()))
}
