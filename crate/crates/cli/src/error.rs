use std::path::Path;

use serde_json::json;

/// Failures of a subcommand, each with its own process exit code.
#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{path}: {message}")]
    Io { path: String, message: String },
    #[error("{0}")]
    Config(String),
    #[error("{0}")]
    Format(String),
    #[error("{0}")]
    Invalid(String),
}

impl CliError {
    pub fn io(path: &Path, e: std::io::Error) -> Self {
        CliError::Io {
            path: path.display().to_string(),
            message: e.to_string(),
        }
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Io { .. } => 3,
            CliError::Config(_) => 4,
            CliError::Format(_) => 5,
            CliError::Invalid(_) => 6,
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            CliError::Usage(_) => "usage",
            CliError::Io { .. } => "io",
            CliError::Config(_) => "config",
            CliError::Format(_) => "format",
            CliError::Invalid(_) => "invalid_input",
        }
    }

    pub fn to_json(&self) -> String {
        json!({
            "error": self.kind(),
            "exit_code": self.exit_code(),
            "message": self.to_string(),
        })
        .to_string()
    }
}

impl From<octdisp::Error> for CliError {
    fn from(e: octdisp::Error) -> Self {
        match e {
            octdisp::Error::Io { path, source } => CliError::io(&path, source),
            octdisp::Error::Format(m) => CliError::Format(m),
            other => CliError::Invalid(other.to_string()),
        }
    }
}
