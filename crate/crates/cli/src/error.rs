use thiserror::Error;

/// Failures of the command-line front end, each mapped to a process exit code.
#[derive(Debug, Error)]
pub enum CliError {
    #[error(transparent)]
    Core(#[from] convext::Error),
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("parse error at line {line}, column {column}: {message}")]
    Parse { line: usize, column: usize, message: String },
    #[error("{0}")]
    Usage(String),
    #[error("check failed: {0}")]
    CheckFailed(String),
}

impl CliError {
    /// 2 for an empty feasible set, 3 for numerical failure, 1 otherwise.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Core(convext::Error::Infeasible(_)) => 2,
            CliError::Core(convext::Error::Numeric(_)) => 3,
            _ => 1,
        }
    }
}

pub type CliResult<T> = std::result::Result<T, CliError>;
