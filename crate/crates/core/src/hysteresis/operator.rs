//! Preisach output, branch maps and energy bookkeeping on a memory curve.
//!
//! All threshold integrals use the midpoint rule of the curve's grid.

use super::play::project;
use super::{ConvexifiableMap, HysteresisError, MemoryCurve, PreisachDensity, Result};

/// `G_bar + dr * sum_j psi(r_j, xi_j)`.
pub fn preisach_output(curve: &MemoryCurve, density: &PreisachDensity) -> f64 {
    let grid = curve.grid();
    let sum: f64 = grid
        .nodes()
        .zip(curve.values())
        .map(|(r, &xi)| density.psi_raw(r, xi))
        .sum();
    density.gbar() + grid.spacing() * sum
}

/// Tentative output and its derivative for the input `u` against committed memory.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BranchPoint {
    pub value: f64,
    pub slope: f64,
}

/// Evaluates the branch map `B(u)` and `B'(u)` in one sweep over the nodes.
///
/// The slope counts only nodes that the tentative update moves, so it is
/// exactly zero at `u = u_prev` (the turning-point degeneracy).
pub fn branch_eval(
    curve_prev: &MemoryCurve,
    density: &PreisachDensity,
    gmap: &ConvexifiableMap,
    u: f64,
) -> BranchPoint {
    let w = gmap.eval(u);
    let grid = curve_prev.grid();
    let mut value = 0.0;
    let mut active = 0.0;
    for (r, &xi) in grid.nodes().zip(curve_prev.values()) {
        let next = project(xi, w, r);
        value += density.psi_raw(r, next);
        if next != xi {
            active += density.rho(r, next);
        }
    }
    BranchPoint {
        value: density.gbar() + grid.spacing() * value,
        slope: gmap.derivative(u) * grid.spacing() * active,
    }
}

pub fn branch_value(
    curve_prev: &MemoryCurve,
    density: &PreisachDensity,
    gmap: &ConvexifiableMap,
    u: f64,
) -> f64 {
    branch_eval(curve_prev, density, gmap, u).value
}

pub fn branch_slope(
    curve_prev: &MemoryCurve,
    density: &PreisachDensity,
    gmap: &ConvexifiableMap,
    u: f64,
) -> f64 {
    branch_eval(curve_prev, density, gmap, u).slope
}

/// `dr * sum_j [psi(xi_j) xi_j - Psi(xi_j)]`.
pub fn stored_energy(curve: &MemoryCurve, density: &PreisachDensity) -> f64 {
    let grid = curve.grid();
    grid.spacing()
        * grid
            .nodes()
            .zip(curve.values())
            .map(|(r, &xi)| density.energy_raw(r, xi))
            .sum::<f64>()
}

/// `dr * sum_j r_j |psi(xi_j^next) - psi(xi_j^prev)|`.
///
/// Exact for one step of the discrete play, since every node moves
/// monotonically within a step.
pub fn dissipation_increment(
    curve_prev: &MemoryCurve,
    curve_next: &MemoryCurve,
    density: &PreisachDensity,
) -> f64 {
    let grid = curve_prev.grid();
    grid.spacing()
        * grid
            .nodes()
            .zip(curve_prev.values().iter().zip(curve_next.values()))
            .map(|(r, (&a, &b))| r * (density.psi_raw(r, b) - density.psi_raw(r, a)).abs())
            .sum::<f64>()
}

/// Output change between two memory states, summed node by node so that its
/// sign is not polluted by cancellation in `G_bar`.
pub fn output_increment(
    curve_prev: &MemoryCurve,
    curve_next: &MemoryCurve,
    density: &PreisachDensity,
) -> f64 {
    let grid = curve_prev.grid();
    grid.spacing()
        * grid
            .nodes()
            .zip(curve_prev.values().iter().zip(curve_next.values()))
            .map(|(r, (&a, &b))| density.psi_raw(r, b) - density.psi_raw(r, a))
            .sum::<f64>()
}

/// r-weighted L1 distance `dr * sum_j r_j |xi_j^A - xi_j^B|`.
pub fn memory_distance(a: &MemoryCurve, b: &MemoryCurve) -> Result<f64> {
    if a.grid() != b.grid() {
        return Err(HysteresisError::GridMismatch);
    }
    let grid = a.grid();
    Ok(grid.spacing()
        * grid
            .nodes()
            .zip(a.values().iter().zip(b.values()))
            .map(|(r, (&x, &y))| r * (x - y).abs())
            .sum::<f64>())
}

/// Active memory level: the largest node `r_j` such that every node up to and
/// including it is pinned to the input, `|xi - u| > r - dr/2`; zero if the
/// first node is already free.
pub fn active_level(curve: &MemoryCurve, u: f64) -> f64 {
    let grid = curve.grid();
    let tol = 0.5 * grid.spacing();
    let mut level = 0.0;
    for (r, &xi) in grid.nodes().zip(curve.values()) {
        if (xi - u).abs() > r - tol {
            level = r;
        } else {
            break;
        }
    }
    level
}
