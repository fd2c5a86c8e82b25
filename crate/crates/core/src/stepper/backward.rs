use rayon::prelude::*;

use super::state::PAR_CHUNK;
use super::{Model, Result, SimState, StepError};
use crate::hysteresis::MemoryCurve;
use crate::spatial::{laplacian, ScalarField};

/// Artificial pre-initial state certifying that the initial memory has a past.
#[derive(Debug, Clone, PartialEq)]
pub struct BackwardStep {
    pub u_minus1: ScalarField,
    pub g_minus1: ScalarField,
    /// Measured `max |u0 - u_{-1}| / tau`.
    pub rate_bound: f64,
}

/// Reverse branch at one cell: the output before the plays pinned at `w0`
/// were dragged there from the input `g(v)`.
///
/// Nodes `r_j < r_c` (the pinned extent, rounded up to the cell edge of the
/// last pinned node) take `max(g(v) - r_j, w0 - 2 r_c + r_j)` for upward
/// motion (mirror image for downward); all other nodes keep their value. The
/// forward play from that memory at `g(v)` to `w0` reproduces the curve.
struct ReverseBranch<'a> {
    model: &'a Model,
    curve: &'a MemoryCurve,
    w0: f64,
    direction: f64,
    pinned: usize,
    r_cap: f64,
}

impl ReverseBranch<'_> {
    fn eval(&self, v: f64) -> f64 {
        let grid = self.curve.grid();
        let density = &self.model.density;
        let w = self.model.gmap.eval(v);
        let mut sum = 0.0;
        for (j, (r, &xi)) in grid.nodes().zip(self.curve.values()).enumerate() {
            let eta = if j < self.pinned {
                if self.direction > 0.0 {
                    (w - r).max(self.w0 - 2.0 * self.r_cap + r)
                } else {
                    (w + r).min(self.w0 + 2.0 * self.r_cap - r)
                }
            } else {
                xi
            };
            sum += density.psi_raw(r, eta);
        }
        density.gbar() + grid.spacing() * sum
    }
}

/// Solves `B~(u_{-1}) = s0 - tau * laplacian(u0)` cell by cell by bisection.
pub fn backward_step(model: &Model, state0: &SimState, tau: f64) -> Result<BackwardStep> {
    let l = model.compat_l;
    let limit = model.density.rho0() / (2.0 * l * l);
    if !(tau > 0.0 && tau < limit) {
        return Err(StepError::Invalid(format!(
            "backward step needs 0 < tau < rho0 / (2 L^2) = {limit}, got {tau}"
        )));
    }
    let lap = laplacian(&state0.u);
    let lambda = model.lambda();
    let grid = model.thresholds;
    let pin_tol = 1e-9 * lambda;

    let cells: Vec<Result<(f64, f64)>> = (0..model.grid.len())
        .into_par_iter()
        .with_min_len(PAR_CHUNK)
        .map(|k| {
            let u0 = state0.u.values()[k];
            let s0 = state0.s.values()[k];
            let lap_k = lap.values()[k];
            if lap_k == 0.0 {
                return Ok((u0, s0));
            }
            let direction = lap_k.signum();
            let curve = &state0.memory[k];
            let w0 = model.gmap.eval(u0);
            let pinned = grid
                .nodes()
                .zip(curve.values())
                .take_while(|(r, &xi)| (xi - (w0 - direction * r)).abs() <= pin_tol)
                .count();
            if pinned == 0 {
                return Err(StepError::BackwardStep {
                    cell: k,
                    reason: "no play is pinned to the initial input".into(),
                });
            }
            let rb = ReverseBranch {
                model,
                curve,
                w0,
                direction,
                pinned,
                r_cap: pinned as f64 * grid.spacing(),
            };
            let target = s0 - tau * lap_k;
            let (mut lo, mut hi) = if direction > 0.0 {
                (-lambda, u0)
            } else {
                (u0, lambda)
            };
            if !(rb.eval(lo) <= target && rb.eval(hi) >= target) {
                return Err(StepError::BackwardStep {
                    cell: k,
                    reason: format!(
                        "target output {target} outside the reverse branch range [{}, {}]",
                        rb.eval(lo),
                        rb.eval(hi)
                    ),
                });
            }
            // run to adjacent floats; far below the 1e-12 Lambda requirement
            for _ in 0..200 {
                let mid = 0.5 * (lo + hi);
                if mid <= lo || mid >= hi {
                    break;
                }
                if rb.eval(mid) < target {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            let (glo, ghi) = (rb.eval(lo), rb.eval(hi));
            Ok(if (glo - target).abs() < (ghi - target).abs() {
                (lo, glo)
            } else {
                (hi, ghi)
            })
        })
        .collect();

    let mut u = Vec::with_capacity(cells.len());
    let mut g = Vec::with_capacity(cells.len());
    for c in cells {
        let (uk, gk) = c?;
        u.push(uk);
        g.push(gk);
    }
    let rate_bound = u
        .iter()
        .zip(state0.u.values())
        .fold(0.0f64, |m, (a, b)| m.max((a - b).abs()))
        / tau;
    Ok(BackwardStep {
        u_minus1: ScalarField::from_values(model.grid, u)?,
        g_minus1: ScalarField::from_values(model.grid, g)?,
        rate_bound,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hysteresis::{ConvexifiableMap, PreisachDensity, ThresholdGrid};
    use crate::spatial::Grid;
    use crate::stepper::{init_state, MemoryInit};
    use std::f64::consts::PI;

    fn model() -> Model {
        Model::new(
            Grid::line(64, 1.0).unwrap(),
            ThresholdGrid::new(1.0, 64).unwrap(),
            PreisachDensity::uniform(1.0, 0.5, 1.0).unwrap(),
            ConvexifiableMap::identity(1.0),
            5.0,
        )
        .unwrap()
    }

    #[test]
    fn flat_initial_state_is_its_own_past() {
        let m = model();
        let st = init_state(
            &m,
            ScalarField::constant(m.grid, 0.2),
            MemoryInit::VirginClamped,
        )
        .unwrap();
        let b = backward_step(&m, &st, 1e-3).unwrap();
        assert_eq!(b.u_minus1, st.u);
        assert_eq!(b.g_minus1, st.s);
        assert_eq!(b.rate_bound, 0.0);
    }

    #[test]
    fn cosine_hits_the_defining_equation() {
        let m = model();
        let u0 = ScalarField::from_fn(m.grid, |x, _| 0.1 * (PI * x).cos());
        let st = init_state(&m, u0, MemoryInit::AutoAdmissible).unwrap();
        let tau = 1e-3;
        let b = backward_step(&m, &st, tau).unwrap();
        let lap = laplacian(&st.u);
        for k in 0..m.grid.len() {
            let target = st.s.values()[k] - tau * lap.values()[k];
            assert!((b.g_minus1.values()[k] - target).abs() <= 1e-12);
            // the past lies on the side the motion comes from
            let du = st.u.values()[k] - b.u_minus1.values()[k];
            assert!(du * lap.values()[k] >= 0.0);
        }
        assert!(b.rate_bound > 0.0 && b.rate_bound.is_finite());
    }

    #[test]
    fn rejects_large_tau() {
        let m = model();
        let st = init_state(
            &m,
            ScalarField::constant(m.grid, 0.2),
            MemoryInit::VirginClamped,
        )
        .unwrap();
        assert!(backward_step(&m, &st, 0.05).is_err());
    }
}
