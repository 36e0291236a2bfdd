use std::process::ExitCode;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),

    #[error("I/O error: {0}")]
    Io(String),

    #[error("{0}")]
    Diverged(String),

    #[error("{0} diagnostic check(s) failed")]
    ChecksFailed(usize),

    #[error("{0}")]
    Other(String),
}

impl CliError {
    pub fn exit_code(&self) -> ExitCode {
        ExitCode::from(match self {
            Self::Config(_) => 2,
            Self::Io(_) => 3,
            Self::Diverged(_) => 4,
            Self::ChecksFailed(_) => 5,
            Self::Other(_) => 1,
        })
    }
}

impl From<qht_core::Error> for CliError {
    fn from(e: qht_core::Error) -> Self {
        use qht_core::Error as E;
        match e {
            E::InvalidParameter { .. } | E::EtaIsOne | E::InvalidGrid(_) => Self::Config(e.to_string()),
            E::Io(_) | E::Csv(_) | E::Json(_) | E::Format(_) => Self::Io(e.to_string()),
            E::ChainDiverged { .. } => Self::Diverged(e.to_string()),
            _ => Self::Other(e.to_string()),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        Self::Io(e.to_string())
    }
}

impl From<csv::Error> for CliError {
    fn from(e: csv::Error) -> Self {
        Self::Io(e.to_string())
    }
}

impl From<serde_json::Error> for CliError {
    fn from(e: serde_json::Error) -> Self {
        Self::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, CliError>;
