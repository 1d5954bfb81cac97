use thiserror::Error;

/// Failures of a CLI invocation, split by exit code.
#[derive(Debug, Error)]
pub enum CliError {
    /// Bad or missing arguments, unreadable inputs. Exit code 1.
    #[error("{0}")]
    Usage(String),
    /// A value that parses but is not admissible. Exit code 2.
    #[error("{0}")]
    Validation(String),
    #[error(transparent)]
    Domain(#[from] chbell_core::Error),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Validation(_) | CliError::Domain(_) => 2,
            CliError::Usage(_) | CliError::Io(_) | CliError::Csv(_) | CliError::Json(_) => 1,
        }
    }

    pub(crate) fn usage(msg: impl Into<String>) -> Self {
        CliError::Usage(msg.into())
    }

    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        CliError::Validation(msg.into())
    }
}

pub type Result<T, E = CliError> = std::result::Result<T, E>;
