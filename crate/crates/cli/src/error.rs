use std::path::Path;

use thiserror::Error;

/// Exit status 1 for domain failures, 2 for I/O and parse failures.
#[derive(Debug, Error)]
pub enum CliError {
    #[error(transparent)]
    Domain(#[from] proxy_beliefs_core::error::Error),
    #[error("invalid scenario: {0}")]
    Scenario(String),
    /// A check failed; the report has already been printed.
    #[error("{0}")]
    Failed(String),
    #[error("{path}: {message}")]
    Io { path: String, message: String },
    #[error("{0}")]
    Parse(String),
    #[error("{0}")]
    Usage(String),
}

impl CliError {
    pub fn io(path: &Path, err: std::io::Error) -> Self {
        CliError::Io {
            path: path.display().to_string(),
            message: err.to_string(),
        }
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Domain(_) | CliError::Scenario(_) | CliError::Failed(_) => 1,
            CliError::Io { .. } | CliError::Parse(_) | CliError::Usage(_) => 2,
        }
    }

    pub fn code(&self) -> &'static str {
        match self {
            CliError::Domain(e) => e.code(),
            CliError::Scenario(_) => "InvalidScenario",
            CliError::Failed(_) => "CheckFailed",
            CliError::Io { .. } => "Io",
            CliError::Parse(_) => "Parse",
            CliError::Usage(_) => "Usage",
        }
    }
}
