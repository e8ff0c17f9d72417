use thiserror::Error;

/// Errors of the command-line layer.
#[derive(Debug, Error)]
pub enum CliError {
    /// The configuration text could not be parsed.
    #[error("{path}:{line}:{column}: {message}")]
    Parse {
        path: String,
        line: usize,
        column: usize,
        message: String,
    },
    /// A configuration value is missing or invalid.
    #[error("invalid configuration key `{key}`: {message}")]
    Config { key: String, message: String },
    /// Inconsistent command-line usage.
    #[error("usage error: {0}")]
    Usage(String),
    /// The numerical library rejected the configured field.
    #[error(transparent)]
    Core(#[from] ou_evolution::Error),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

impl CliError {
    pub fn config(key: impl Into<String>, message: impl Into<String>) -> Self {
        CliError::Config {
            key: key.into(),
            message: message.into(),
        }
    }

    /// Process exit code: 2 for usage and configuration errors, 1 otherwise.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Parse { .. } | CliError::Config { .. } | CliError::Usage(_) => 2,
            CliError::Core(ou_evolution::Error::Usage(_)) => 2,
            _ => 1,
        }
    }
}

pub type Result<T, E = CliError> = std::result::Result<T, E>;
