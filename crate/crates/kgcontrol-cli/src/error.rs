//! Harness errors and the exit-code contract.

use std::path::{Path, PathBuf};

use kgcontrol::KgError;
use thiserror::Error;

/// Process exit status of every subcommand.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum ExitStatus {
    /// Target reached within tolerance and every hypothesis check passed.
    Success,
    /// A correctness property of the simulator failed.
    CorrectnessFailure,
    /// A hypothesis failed, a target was not reached, or a table is not monotone.
    Flagged,
    /// The scenario or the command line could not be used.
    Usage,
    /// A control amplitude would exceed the cap.
    CapViolation,
}

impl ExitStatus {
    pub fn code(self) -> u8 {
        match self {
            ExitStatus::Success => 0,
            ExitStatus::CorrectnessFailure => 1,
            ExitStatus::Flagged => 2,
            ExitStatus::Usage => 64,
            ExitStatus::CapViolation => 65,
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            ExitStatus::Success => "success",
            ExitStatus::CorrectnessFailure => "correctness-failure",
            ExitStatus::Flagged => "flagged",
            ExitStatus::Usage => "usage",
            ExitStatus::CapViolation => "cap-violation",
        }
    }
}

#[derive(Debug, Error)]
pub enum HarnessError {
    /// The document is not valid TOML or does not match the schema; the
    /// message carries line and column.
    #[error("{0}")]
    Syntax(String),

    #[error("field `{field}`: {message}")]
    Field { field: String, message: String },

    #[error("{path}: {inner}")]
    InFile { path: PathBuf, inner: Box<HarnessError> },

    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },

    #[error(transparent)]
    Engine(#[from] KgError),
}

impl HarnessError {
    pub fn status(&self) -> ExitStatus {
        match self {
            HarnessError::Syntax(_) | HarnessError::Field { .. } => ExitStatus::Usage,
            HarnessError::InFile { inner, .. } => inner.status(),
            HarnessError::Io { .. } => ExitStatus::CorrectnessFailure,
            HarnessError::Engine(e) => engine_status(e),
        }
    }

    pub(crate) fn in_file(self, path: &Path) -> HarnessError {
        HarnessError::InFile { path: path.into(), inner: Box::new(self) }
    }
}

/// Exit status of an engine error raised while running a valid scenario.
pub fn engine_status(error: &KgError) -> ExitStatus {
    match error {
        KgError::CapViolation { .. } => ExitStatus::CapViolation,
        KgError::StageFailed { .. } => ExitStatus::Flagged,
        KgError::InvalidArgument(_)
        | KgError::InvalidGrid(_)
        | KgError::Expression { .. }
        | KgError::FrequencyOutOfRange { .. } => ExitStatus::Usage,
        KgError::GridMismatch(_) => ExitStatus::CorrectnessFailure,
    }
}
