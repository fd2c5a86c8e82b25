//! Implicit time stepping for `d/dt G[u] = laplacian(u)`.
//!
//! One backward Euler step solves, cell by cell,
//! `B(u) - s_prev - tau * laplacian(u) = 0` where `B` is the Preisach branch
//! map against the committed memory. `B` is nondecreasing and the Neumann
//! term is positive semidefinite, so the system is monotone; it is solved by
//! damped Newton with a relaxation fallback, then the memory is committed.

mod backward;
mod solver;
mod state;

pub use backward::{backward_step, BackwardStep};
pub use solver::{residual_eval, solve_newton, solve_relaxation, step, SolveOutcome};
pub use state::{init_state, MemoryInit, Model, SimState, SolverOptions, StepReport};

use thiserror::Error;

use crate::hysteresis::{HypothesisReport, HysteresisError};
use crate::spatial::SpatialError;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum StepError {
    #[error("invalid model or state: {0}")]
    Invalid(String),
    #[error("initial state violates the compatibility hypothesis:\n{0}")]
    Hypothesis(HypothesisReport),
    #[error("backward step failed at cell {cell}: {reason}")]
    BackwardStep { cell: usize, reason: String },
    #[error("nonlinear solve failed at step {step}; residual history {residual_history:?}")]
    SolverFailed {
        step: usize,
        residual_history: Vec<f64>,
    },
    #[error(transparent)]
    Spatial(#[from] SpatialError),
    #[error(transparent)]
    Hysteresis(#[from] HysteresisError),
}

impl StepError {
    /// Process exit code for the command-line front end.
    pub fn exit_code(&self) -> i32 {
        match self {
            StepError::Hypothesis(_) | StepError::BackwardStep { .. } => 3,
            StepError::SolverFailed { .. } => 4,
            StepError::Invalid(_) | StepError::Spatial(_) | StepError::Hysteresis(_) => 2,
        }
    }
}

pub type Result<T> = std::result::Result<T, StepError>;
