use thiserror::Error;

/// CLI failure, carrying its process exit code.
#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{0}")]
    Data(String),
    #[error("{0}")]
    Training(String),
    #[error("{0}")]
    Output(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Data(_) => 3,
            CliError::Training(_) => 4,
            CliError::Output(_) => 1,
        }
    }

    /// Loading and parsing failures.
    pub fn data(e: rulecast::Error) -> Self {
        match e {
            rulecast::Error::InvalidParameter(m) => CliError::Usage(m),
            e => CliError::Data(e.to_string()),
        }
    }

    /// Failures while fitting models.
    pub fn training(e: rulecast::Error) -> Self {
        match e {
            rulecast::Error::InvalidParameter(m) => CliError::Usage(m),
            e => CliError::Training(e.to_string()),
        }
    }
}
