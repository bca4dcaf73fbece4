use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

/// Errors raised by the numerical core.
///
/// Each variant maps to a stable string code (see [`Error::code`]) that the
/// service layer forwards to clients unchanged.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// An input outside the mathematical domain of the operation.
    #[error("invalid `{parameter}`: {message}")]
    Domain {
        parameter: &'static str,
        message: String,
    },

    /// An iterative routine failed; `estimate` carries the best value reached.
    #[error("{message}")]
    Numerical {
        message: String,
        estimate: Option<f64>,
    },

    /// The requested target cannot be reached under the given assumptions.
    #[error("infeasible: {message}")]
    Infeasible { message: String },

    #[error("arm {arm}: no complete records with s={stratum}")]
    StratumCollapse { arm: u8, stratum: u8 },

    #[error("arm {arm}: design matrix of the {step} working model is singular")]
    Collinearity { arm: u8, step: &'static str },

    #[error("arm {arm}: {found} complete records, at least {needed} required")]
    InsufficientData { arm: u8, needed: usize, found: usize },

    #[error("line {line}: {message}")]
    Parse { line: u64, message: String },
}

impl Error {
    pub(crate) fn domain(parameter: &'static str, message: impl Into<String>) -> Self {
        Error::Domain {
            parameter,
            message: message.into(),
        }
    }

    pub(crate) fn infeasible(message: impl Into<String>) -> Self {
        Error::Infeasible {
            message: message.into(),
        }
    }

    pub fn code(&self) -> &'static str {
        match self {
            Error::Domain { .. } => "domain_error",
            Error::Numerical { .. } => "numerical_error",
            Error::Infeasible { .. } => "infeasible",
            Error::StratumCollapse { .. } => "stratum_collapse",
            Error::Collinearity { .. } => "collinearity",
            Error::InsufficientData { .. } => "insufficient_data",
            Error::Parse { .. } => "parse_error",
        }
    }

    /// Name of the offending input, when one can be singled out.
    pub fn parameter(&self) -> Option<&'static str> {
        match self {
            Error::Domain { parameter, .. } => Some(parameter),
            _ => None,
        }
    }
}
