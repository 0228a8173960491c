//! Error type carrying the process exit code.

use cause_core::train::TrainError;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorKind {
    /// Exit 1: I/O, malformed data, missing files, untrainable inputs.
    Runtime,
    /// Exit 2: invalid or incomplete configuration.
    Config,
    /// Exit 3: non-finite parameters during training.
    Numerical,
}

#[derive(Debug, Clone, thiserror::Error)]
#[error("{message}")]
pub struct CliError {
    pub kind: ErrorKind,
    pub message: String,
    /// The training failure behind this error, if any.
    pub train: Option<TrainError>,
}

impl CliError {
    pub fn runtime(message: impl Into<String>) -> Self {
        Self {
            kind: ErrorKind::Runtime,
            message: message.into(),
            train: None,
        }
    }

    pub fn config(message: impl Into<String>) -> Self {
        Self {
            kind: ErrorKind::Config,
            message: message.into(),
            train: None,
        }
    }

    pub fn exit_code(&self) -> i32 {
        match self.kind {
            ErrorKind::Runtime => 1,
            ErrorKind::Config => 2,
            ErrorKind::Numerical => 3,
        }
    }

    /// Prefixes the message with context, keeping the kind.
    pub fn context(mut self, what: impl std::fmt::Display) -> Self {
        self.message = format!("{what}: {}", self.message);
        self
    }
}

impl From<TrainError> for CliError {
    fn from(e: TrainError) -> Self {
        let kind = match e {
            TrainError::NumericalFailure { .. } => ErrorKind::Numerical,
            TrainError::InvalidSpec(_) => ErrorKind::Config,
            _ => ErrorKind::Runtime,
        };
        Self {
            kind,
            message: format!("{e:?}: {e}"),
            train: Some(e),
        }
    }
}

pub fn io_error(path: &std::path::Path, e: std::io::Error) -> CliError {
    CliError::runtime(format!("{}: {e}", path.display()))
}
