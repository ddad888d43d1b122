use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum HarnessError {
    /// Malformed document; the message carries line and column context.
    #[error("config parse error: {0}")]
    Parse(String),

    /// Well-formed document that violates one or more invariants.
    #[error("invalid experiment: {}", .0.join("; "))]
    Invalid(Vec<String>),

    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Sim(#[from] swarmloc::Error),
}

impl HarnessError {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Self::Io { path: path.into(), source }
    }

    /// Flat list of messages for machine-readable reporting.
    pub fn messages(&self) -> Vec<String> {
        match self {
            Self::Invalid(v) => v.clone(),
            Self::Sim(swarmloc::Error::Validation(v)) => v.clone(),
            other => vec![other.to_string()],
        }
    }
}

pub type Result<T, E = HarnessError> = std::result::Result<T, E>;
