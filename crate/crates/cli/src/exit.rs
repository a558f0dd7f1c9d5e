use respondyn_core::Error;

pub const OK: i32 = 0;
pub const PRECONDITION: i32 = 1;
pub const NUMERIC: i32 = 2;
pub const USAGE: i32 = 64;
pub const PARSE: i32 = 65;

/// A failed run: exit code plus the message printed on standard error.
#[derive(Debug, Clone, PartialEq)]
pub struct Failure {
    pub code: i32,
    pub message: String,
}

impl Failure {
    pub fn usage(message: impl Into<String>) -> Self {
        Failure {
            code: USAGE,
            message: message.into(),
        }
    }

    pub fn parse(token: impl Into<String>, reason: impl Into<String>) -> Self {
        Failure {
            code: PARSE,
            message: format!("cannot parse `{}`: {}", token.into(), reason.into()),
        }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match &e {
            Error::Parse { .. } => PARSE,
            Error::Argument(_) => USAGE,
            Error::Domain { .. } | Error::Precondition(_) => PRECONDITION,
            Error::BranchSolve { .. } | Error::Convergence { .. } | Error::Numeric(_) => NUMERIC,
        };
        Failure {
            code,
            message: e.to_string(),
        }
    }
}
