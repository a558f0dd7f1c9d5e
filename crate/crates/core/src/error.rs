use thiserror::Error;

/// Errors raised by the library. The CLI maps each variant onto an exit code.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("point {x} is outside the phase space {domain}")]
    Domain { x: f64, domain: &'static str },

    #[error("invalid argument: {0}")]
    Argument(String),

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("cannot parse `{token}`: {reason}")]
    Parse { token: String, reason: String },

    #[error("inverse branch {branch} did not converge for y = {y}")]
    BranchSolve { branch: usize, y: f64 },

    #[error("{what} did not converge (residual {residual:e})")]
    Convergence { what: String, residual: f64 },

    #[error("numeric failure: {0}")]
    Numeric(String),
}

impl Error {
    pub(crate) fn precondition(msg: impl Into<String>) -> Self {
        Error::Precondition(msg.into())
    }

    pub(crate) fn argument(msg: impl Into<String>) -> Self {
        Error::Argument(msg.into())
    }

    pub(crate) fn parse(token: impl Into<String>, reason: impl Into<String>) -> Self {
        Error::Parse {
            token: token.into(),
            reason: reason.into(),
        }
    }

    /// True for failures of an iterative or direct numerical method, as opposed
    /// to bad input.
    pub fn is_numeric(&self) -> bool {
        matches!(
            self,
            Error::BranchSolve { .. } | Error::Convergence { .. } | Error::Numeric(_)
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;
