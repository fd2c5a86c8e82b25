//! Scenario configuration, the run loop, run-level diagnostics and file output.

mod config;
mod diagnostics;
mod output;
mod refine;
mod run;

pub use config::{DensitySpec, GmapSpec, InitialSpec, Scenario, SolverOverrides};
pub use diagnostics::{
    decay_fit, omega_bar, orlicz_budget, steady_detect, Budget, DecayFit, TimeSeriesRecord,
    STEADY_WINDOW,
};
pub use output::{read_memory_csv, write_memory_csv, write_snapshot_csv, TIMESERIES_HEADER};
pub use refine::{
    interpolate_output, interpolate_piecewise_constant, tau_refinement, FieldRecord, RefinementRow,
};
pub use run::{run, run_with, OmegaBarPoint, RunOptions, RunOutcome, SummaryReport};

use thiserror::Error;

use crate::stepper::StepError;

#[derive(Debug, Error)]
pub enum SimError {
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error(transparent)]
    Step(#[from] StepError),
    #[error("I/O error: {0}")]
    Io(String),
    #[error("insufficient data: {0}")]
    InsufficientData(String),
    #[error("time {t} outside the recorded span [{start}, {end}]")]
    OutOfRange { t: f64, start: f64, end: f64 },
}

impl SimError {
    /// 0 ok, 2 bad config, 3 hypothesis violation, 4 solver failure, 5 I/O.
    pub fn exit_code(&self) -> i32 {
        match self {
            SimError::Config(_) => 2,
            SimError::Step(e) => e.exit_code(),
            SimError::Io(_) => 5,
            SimError::InsufficientData(_) | SimError::OutOfRange { .. } => 2,
        }
    }
}

impl From<std::io::Error> for SimError {
    fn from(e: std::io::Error) -> Self {
        SimError::Io(e.to_string())
    }
}

impl From<csv::Error> for SimError {
    fn from(e: csv::Error) -> Self {
        SimError::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, SimError>;
