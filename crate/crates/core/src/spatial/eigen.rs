use std::f64::consts::PI;

use super::{Grid, Result, ScalarField, SpatialError};

/// Tensor index of a discrete cosine mode; `ky` is ignored (must be 0) in 1D.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ModeIndex {
    pub kx: usize,
    pub ky: usize,
}

impl ModeIndex {
    pub fn new(kx: usize, ky: usize) -> Self {
        Self { kx, ky }
    }
}

impl From<usize> for ModeIndex {
    fn from(k: usize) -> Self {
        Self { kx: k, ky: 0 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EigenPair {
    pub index: ModeIndex,
    pub mu: f64,
    pub mode: ScalarField,
}

fn axis_eigen(k: usize, n: usize, h: f64) -> f64 {
    2.0 / (h * h) * (1.0 - (k as f64 * PI / n as f64).cos())
}

fn axis_mode(k: usize, n: usize, length: f64, i: usize) -> f64 {
    let scale = if k == 0 {
        (1.0 / length).sqrt()
    } else {
        (2.0 / length).sqrt()
    };
    scale * (k as f64 * PI * (i as f64 + 0.5) / n as f64).cos()
}

/// Discrete Neumann eigenpair `-laplacian(e) = mu e`, normalized in the
/// cell-measure L2 product.
pub fn neumann_eigen(grid: &Grid, index: impl Into<ModeIndex>) -> Result<EigenPair> {
    let index = index.into();
    let (nx, ny) = (grid.nx(), grid.ny());
    let ky_limit = if grid.dim() == 1 { 1 } else { ny };
    if index.kx >= nx || index.ky >= ky_limit {
        return Err(SpatialError::ModeOutOfRange {
            kx: index.kx,
            ky: index.ky,
            nx,
            ny,
        });
    }
    let mut mu = axis_eigen(index.kx, nx, grid.hx());
    let values: Vec<f64> = if grid.dim() == 1 {
        (0..nx)
            .map(|i| axis_mode(index.kx, nx, grid.lx(), i))
            .collect()
    } else {
        mu += axis_eigen(index.ky, ny, grid.hy());
        (0..nx * ny)
            .map(|k| {
                axis_mode(index.kx, nx, grid.lx(), k % nx)
                    * axis_mode(index.ky, ny, grid.ly(), k / nx)
            })
            .collect()
    };
    Ok(EigenPair {
        index,
        mu,
        mode: ScalarField::from_values(*grid, values)?,
    })
}

/// Smallest positive discrete Neumann eigenvalue.
pub fn first_nonzero_eigenvalue(grid: &Grid) -> f64 {
    let mx = axis_eigen(1, grid.nx(), grid.hx());
    if grid.dim() == 1 {
        mx
    } else {
        mx.min(axis_eigen(1, grid.ny(), grid.hy()))
    }
}
