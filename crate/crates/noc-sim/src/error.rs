//! Error types shared across the simulator.

use thiserror::Error;

/// Unified error type for model construction and simulation.
#[derive(Debug, Error)]
pub enum SimError {
    /// A caller-supplied parameter violates an operation precondition.
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// Router or core configuration is inconsistent (non-neighbor
    /// destination, duplicate matrix cell, out-of-range weight index, ...).
    #[error("configuration error: {0}")]
    Configuration(String),

    /// Neuron placement could not satisfy core capacity.
    #[error("placement error: {0}")]
    Placement(String),

    /// Route synthesis exceeded a router's connection-matrix budget.
    #[error("routing error: {0}")]
    Routing(String),

    /// Text-format parse failure, with file/line context where known.
    #[error("parse error: {0}")]
    Parse(String),

    /// DMA transfer outside the destination's capacity.
    #[error("bounds error: {0}")]
    Bounds(String),

    /// DMA issued against an enabled (busy) core.
    #[error("busy: {0}")]
    Busy(String),

    /// Instruction word could not be decoded.
    #[error("decode error: {0}")]
    Decode(String),

    /// The fabric made no progress within the watchdog budget.
    #[error("deadlock: {0}")]
    Deadlock(String),

    /// Underlying I/O failure, annotated with the path involved.
    #[error("io error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

impl SimError {
    pub fn io(path: impl Into<String>, source: std::io::Error) -> Self {
        SimError::Io { path: path.into(), source }
    }

    pub fn invalid(msg: impl Into<String>) -> Self {
        SimError::InvalidArgument(msg.into())
    }
}

/// Convenience alias used throughout the crate.
pub type Result<T> = std::result::Result<T, SimError>;
