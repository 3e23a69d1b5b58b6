use thiserror::Error;

use crate::qobj::Kind;

/// Errors produced by the library.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum QsimError {
    #[error("incompatible kinds: {0}")]
    KindMismatch(String),

    #[error("dimension mismatch: {0}")]
    DimsMismatch(String),

    #[error("invalid subsystem selection: {0}")]
    InvalidSubsystem(String),

    #[error("invalid dimension: {0}")]
    InvalidDimension(String),

    #[error("index {index} out of range for dimension {dim}")]
    InvalidIndex { index: usize, dim: usize },

    #[error("system too large: {0}")]
    TooLarge(String),

    #[error("shape {rows}x{cols} does not satisfy the {kind:?} invariants for dims {dims:?}")]
    Shape {
        kind: Kind,
        rows: usize,
        cols: usize,
        dims: Vec<usize>,
    },

    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("invalid options: {0}")]
    InvalidOptions(String),

    #[error("integration failed at t = {last_good_time}: {reason}")]
    IntegrationFailure { last_good_time: f64, reason: String },

    #[error("all {ntraj} trajectories failed")]
    EnsembleFailure { ntraj: usize },

    #[error("steady state solve failed (condition estimate {condition:.3e}): {reason}")]
    SteadyStateFailure { condition: f64, reason: String },

    #[error("eigendecomposition did not converge")]
    EigenFailure,

    #[error("dynamical Fock dimension exceeded its maximum of {dim_max}")]
    DfdOverflow { dim_max: usize },

    #[error("coefficient evaluation failed: {0}")]
    Coefficient(String),
}

pub type Result<T, E = QsimError> = std::result::Result<T, E>;
