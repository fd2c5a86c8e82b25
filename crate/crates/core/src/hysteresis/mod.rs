//! Scalar hysteresis engine.
//!
//! A Preisach memory at one spatial point is stored as a [`MemoryCurve`]: the
//! play values `xi(r)` sampled at the midpoints of a uniform threshold grid on
//! `(0, Lambda)`. Everything here is a pure function of its arguments, so
//! curves can be updated from many worker threads without coordination.

mod admissible;
mod curve;
mod density;
mod gmap;
mod operator;
mod orlicz;
mod play;
mod thresholds;

pub use admissible::{
    admissible_memory, pinned_memory, validate_hypothesis, Condition, HypothesisReport, Violation,
};
pub use curve::MemoryCurve;
pub use density::{DensityKind, PreisachDensity, TabulatedDensity};
pub use gmap::{ConvexifiableMap, MapKind};
pub use operator::{
    active_level, branch_eval, branch_slope, branch_value, dissipation_increment, memory_distance,
    output_increment, preisach_output, stored_energy, BranchPoint,
};
pub use orlicz::{orlicz_functions, OrliczFunctions};
pub use play::play_update;
pub use thresholds::ThresholdGrid;

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum HysteresisError {
    #[error("play threshold must be positive, got {0}")]
    InvalidThreshold(f64),
    #[error("play value {xi} outside [-{lambda}, {lambda}]")]
    Domain { xi: f64, lambda: f64 },
    #[error("memory curves live on different threshold grids")]
    GridMismatch,
    #[error("memory curve has {got} values but the threshold grid has {expected} nodes")]
    LengthMismatch { expected: usize, got: usize },
    #[error("invalid threshold grid: {0}")]
    InvalidGrid(String),
    #[error("invalid Preisach density: {0}")]
    InvalidDensity(String),
    #[error("invalid input map g: {0}")]
    InvalidMap(String),
    #[error("initial memory is not admissible: {0}")]
    HypothesisViolation(String),
    #[error("Orlicz functions are provided for N in {{1, 2, 3}}, got {0}")]
    UnsupportedDimension(usize),
    #[error("time step must be positive, got {0}")]
    InvalidTimeStep(f64),
}

pub type Result<T> = std::result::Result<T, HysteresisError>;
