use serde::Serialize;
use srk_core::error::{ArchError, BoundError, OracleError, PlanError};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Parse(String),
    #[error("{0}")]
    InvalidInput(String),
    #[error("{0}")]
    CapViolation(String),
    #[error("{0}")]
    RegimeViolation(String),
    #[error("{failures} of {total} sandwich checks failed")]
    VerifyFailed { failures: usize, total: usize },
    #[error("{0}")]
    Io(#[from] std::io::Error),
}

#[derive(Serialize)]
struct ErrorJson<'a> {
    error: &'a str,
    message: String,
}

impl CliError {
    pub fn kind(&self) -> &'static str {
        match self {
            CliError::Parse(_) => "parse_error",
            CliError::InvalidInput(_) => "invalid_input",
            CliError::CapViolation(_) => "cap_violation",
            CliError::RegimeViolation(_) => "regime_violation",
            CliError::VerifyFailed { .. } => "verify_failed",
            CliError::Io(_) => "io_error",
        }
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::VerifyFailed { .. } => 1,
            CliError::Parse(_) | CliError::InvalidInput(_) => 2,
            CliError::CapViolation(_) => 3,
            CliError::RegimeViolation(_) => 4,
            CliError::Io(_) => 5,
        }
    }

    /// One-line JSON object `{"error": kind, "message": ...}`.
    pub fn to_json(&self) -> String {
        serde_json::to_string(&ErrorJson {
            error: self.kind(),
            message: self.to_string(),
        })
        .expect("error serializes")
    }
}

impl From<OracleError> for CliError {
    fn from(e: OracleError) -> Self {
        match e {
            OracleError::OddUniverse(_) | OracleError::CapExceeded { .. } => CliError::CapViolation(e.to_string()),
            OracleError::UnknownVariable(_) => CliError::InvalidInput(e.to_string()),
        }
    }
}

impl From<ArchError> for CliError {
    fn from(e: ArchError) -> Self {
        match e {
            ArchError::DegreeCapExceeded { .. } => CliError::CapViolation(e.to_string()),
            _ => CliError::InvalidInput(e.to_string()),
        }
    }
}

impl From<BoundError> for CliError {
    fn from(e: BoundError) -> Self {
        match e {
            BoundError::RegimeViolation(_) | BoundError::PreconditionViolation(_) => {
                CliError::RegimeViolation(e.to_string())
            }
            _ => CliError::InvalidInput(e.to_string()),
        }
    }
}

impl From<PlanError> for CliError {
    fn from(e: PlanError) -> Self {
        CliError::InvalidInput(e.to_string())
    }
}

impl From<serde_json::Error> for CliError {
    fn from(e: serde_json::Error) -> Self {
        CliError::Parse(e.to_string())
    }
}

impl From<csv::Error> for CliError {
    fn from(e: csv::Error) -> Self {
        CliError::Io(std::io::Error::other(e))
    }
}
