//! CLI error classification for exit codes: 1 for user, data and
//! configuration problems, 2 for convergence failures.

use std::fmt;

#[derive(Debug)]
pub enum CliError {
    User(String),
    Convergence(String),
}

impl CliError {
    pub fn user(message: impl Into<String>) -> Self {
        Self::User(message.into())
    }

    pub fn exit_code(&self) -> u8 {
        match self {
            Self::User(_) => 1,
            Self::Convergence(_) => 2,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::User(m) | Self::Convergence(m) => write!(f, "{m}"),
        }
    }
}

impl From<durprobit::Error> for CliError {
    fn from(error: durprobit::Error) -> Self {
        match error {
            durprobit::Error::Convergence(m) => Self::Convergence(m),
            other => Self::User(other.to_string()),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(error: std::io::Error) -> Self {
        Self::User(error.to_string())
    }
}

impl From<serde_json::Error> for CliError {
    fn from(error: serde_json::Error) -> Self {
        Self::User(error.to_string())
    }
}
