//! Error type shared by every module of the crate.

use thiserror::Error;

/// Convenience alias used throughout the crate.
pub type Result<T> = std::result::Result<T, KgError>;

/// Everything that can go wrong while building fields, propagating states,
/// compiling schedules or planning.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum KgError {
    /// Grid parameters outside the supported range.
    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    /// A frequency that the grid cannot represent.
    #[error("frequency {frequency:?} is not representable on a grid with {points_per_axis} points per axis")]
    FrequencyOutOfRange {
        /// The offending frequency vector.
        frequency: Vec<i64>,
        /// Points per axis of the grid it was requested on.
        points_per_axis: usize,
    },

    /// Two objects that must live on the same grid do not.
    #[error("grid mismatch: {0}")]
    GridMismatch(String),

    /// An argument violated an operation's precondition.
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// A field expression could not be parsed or evaluated.
    #[error("expression error at column {column}: {message}")]
    Expression {
        /// 1-based column of the offending token.
        column: usize,
        /// Human-readable description.
        message: String,
    },

    /// A control amplitude would exceed the configured cap.
    #[error("amplitude cap violated by {what}: |u| = {amplitude:.3e} > {cap:.1e}; smallest feasible tau is {min_feasible_tau:.3e}")]
    CapViolation {
        /// Which construct (leaf, dilation block, ...) produced the amplitude.
        what: String,
        /// Largest control amplitude requested.
        amplitude: f64,
        /// The configured cap.
        cap: f64,
        /// Smallest conjugation time for which the construct fits under the cap.
        min_feasible_tau: f64,
    },

    /// A planning stage could not meet its error budget.
    #[error("stage '{stage}' failed: {message}")]
    StageFailed {
        /// Name of the failing stage.
        stage: String,
        /// Description of the failure.
        message: String,
    },
}
