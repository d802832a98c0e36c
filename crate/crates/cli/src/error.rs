use std::fmt;

use invariant_forge::Error as CoreError;

/// Process exit codes. These are a stable contract.
pub mod exit {
    pub const VERIFY_FAILED: i32 = 1;
    pub const VALIDATION: i32 = 2;
    pub const INTEGRATOR: i32 = 3;
    pub const SINGULAR_COVARIANCE: i32 = 4;
    pub const DEGENERATE: i32 = 5;
}

#[derive(Debug)]
pub struct Failure {
    pub code: i32,
    pub error: anyhow::Error,
}

impl Failure {
    pub fn new(code: i32, error: impl Into<anyhow::Error>) -> Self {
        Self {
            code,
            error: error.into(),
        }
    }

    pub fn validation(msg: impl fmt::Display) -> Self {
        Self::new(exit::VALIDATION, anyhow::anyhow!("{msg}"))
    }
}

impl fmt::Display for Failure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:#}", self.error)
    }
}

impl From<CoreError> for Failure {
    fn from(e: CoreError) -> Self {
        let code = match e {
            CoreError::StateOutOfRange { .. } => exit::INTEGRATOR,
            CoreError::SingularCovariance => exit::SINGULAR_COVARIANCE,
            _ => exit::VALIDATION,
        };
        Self::new(code, e)
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Self::new(exit::VALIDATION, e)
    }
}

impl From<csv::Error> for Failure {
    fn from(e: csv::Error) -> Self {
        Self::new(exit::VALIDATION, e)
    }
}

impl From<serde_json::Error> for Failure {
    fn from(e: serde_json::Error) -> Self {
        Self::new(exit::VALIDATION, e)
    }
}

pub type CmdResult<T = ()> = Result<T, Failure>;
