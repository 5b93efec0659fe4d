use thiserror::Error;

/// Errors raised by the numerical routines.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("accuracy error in {what}: estimate {estimate:e}, error bound {error:e}")]
    Accuracy { what: String, estimate: f64, error: f64 },

    #[error("bracket [{lo}, {hi}] does not straddle target {target}")]
    Bracket { lo: f64, hi: f64, target: f64 },

    #[error("degenerate input: {0}")]
    Degenerate(String),
}

impl Error {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    pub(crate) fn accuracy(what: impl Into<String>, estimate: f64, error: f64) -> Self {
        Error::Accuracy {
            what: what.into(),
            estimate,
            error,
        }
    }

    /// Prefixes the label of an accuracy failure so callers can tell which
    /// integral or root gave up.
    pub fn context(self, label: &str) -> Self {
        match self {
            Error::Accuracy { what, estimate, error } => Error::Accuracy {
                what: format!("{label}: {what}"),
                estimate,
                error,
            },
            other => other,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
