use std::path::{Path, PathBuf};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    BadInput(String),
    #[error("missing {path}; run `storynet {stage}` first")]
    MissingStage { stage: &'static str, path: PathBuf },
    #[error("{0}")]
    Convergence(String),
    #[error("{context}: {source}")]
    Io {
        context: String,
        #[source]
        source: std::io::Error,
    },
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::BadInput(_) => 2,
            CliError::MissingStage { .. } => 3,
            CliError::Convergence(_) => 4,
            CliError::Io { .. } => 1,
        }
    }

    pub fn bad(message: impl std::fmt::Display) -> Self {
        CliError::BadInput(message.to_string())
    }

    pub fn io(path: &Path, source: std::io::Error) -> Self {
        CliError::Io {
            context: path.display().to_string(),
            source,
        }
    }
}

pub type Result<T> = std::result::Result<T, CliError>;
