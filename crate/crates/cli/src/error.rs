use thiserror::Error;
use wgsqz::ErrorKind;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("parse error at line {line}, column {column}: {message}")]
    Parse { line: usize, column: usize, message: String },
    #[error("invalid value for `{key}`: {reason}")]
    Validation { key: String, reason: String },
    #[error("unknown preset `{0}` (available: {1})")]
    UnknownPreset(String, String),
}

impl ConfigError {
    pub(crate) fn invalid(key: impl Into<String>, reason: impl Into<String>) -> Self {
        ConfigError::Validation {
            key: key.into(),
            reason: reason.into(),
        }
    }
}

#[derive(Debug, Error)]
pub enum CliError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Model(#[from] wgsqz::Error),
    #[error("i/o error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

impl CliError {
    /// 1 for configuration and output problems, 2 for inputs outside the
    /// model's domain, 3 for numerical failures.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) | CliError::Io { .. } => 1,
            CliError::Model(e) => match e.kind() {
                ErrorKind::Domain => 2,
                ErrorKind::Numerical => 3,
            },
        }
    }
}
