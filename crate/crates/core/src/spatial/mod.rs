//! Cell-centred finite differences on uniform 1D/2D grids with homogeneous
//! Neumann boundary conditions.
//!
//! Boundary cells see a mirrored ghost value, so the stencil telescopes and
//! `sum(laplacian(f)) * cell_measure` vanishes up to roundoff. Reductions
//! run in a fixed sequential order and are bit-stable.

mod eigen;
mod field;
mod solve;

pub use eigen::{first_nonzero_eigenvalue, neumann_eigen, EigenPair, ModeIndex};
pub use field::{gradient_energy, inner, integrate, laplacian, Grid, ScalarField};
pub use solve::spd_solve;

pub(crate) use field::apply_laplacian;

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SpatialError {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),
    #[error("field has {got} values, grid has {expected} cells")]
    FieldLength { expected: usize, got: usize },
    #[error("field contains a non-finite value at cell {0}")]
    NonFinite(usize),
    #[error("fields live on different grids")]
    GridMismatch,
    #[error("eigenmode ({kx}, {ky}) out of range for a {nx}x{ny} grid")]
    ModeOutOfRange {
        kx: usize,
        ky: usize,
        nx: usize,
        ny: usize,
    },
    #[error("linear solve did not converge in {iterations} iterations (relative residual {residual:.3e})")]
    NotConverged { iterations: usize, residual: f64 },
    #[error("invalid linear system: {0}")]
    InvalidSystem(String),
}

pub type Result<T> = std::result::Result<T, SpatialError>;
