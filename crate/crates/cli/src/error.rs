use std::fmt;

use idt_core::IdtError;
use serde::Serialize;

#[derive(Debug)]
pub enum CliError {
    /// The configuration does not parse or fails validation.
    Config(String),
    Core(IdtError),
    Io(std::io::Error),
    Internal(String),
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Config(m) => write!(f, "invalid configuration: {m}"),
            CliError::Core(e) => write!(f, "{e}"),
            CliError::Io(e) => write!(f, "io error: {e}"),
            CliError::Internal(m) => write!(f, "internal error: {m}"),
        }
    }
}

impl std::error::Error for CliError {}

impl From<IdtError> for CliError {
    fn from(e: IdtError) -> Self {
        CliError::Core(e)
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io(e)
    }
}

#[derive(Debug, Serialize)]
pub struct ErrorReport {
    pub error: String,
    pub message: String,
}

impl CliError {
    pub fn kind(&self) -> String {
        match self {
            CliError::Config(_) => "ConfigError".into(),
            CliError::Core(e) => e.kind().into(),
            CliError::Io(_) => "IoError".into(),
            CliError::Internal(_) => "InternalError".into(),
        }
    }

    pub fn report(&self) -> ErrorReport {
        ErrorReport { error: self.kind(), message: self.to_string() }
    }
}
