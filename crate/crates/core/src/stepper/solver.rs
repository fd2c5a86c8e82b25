use rayon::prelude::*;

use super::state::PAR_CHUNK;
use super::{Model, Result, SimState, SolverOptions, StepError, StepReport};
use crate::hysteresis::{
    dissipation_increment, orlicz_functions, preisach_output, stored_energy, MemoryCurve,
};
use crate::spatial::{apply_laplacian, gradient_energy, integrate, spd_solve, ScalarField};

/// Result of one nonlinear solve, converged or not.
#[derive(Debug, Clone, PartialEq)]
pub struct SolveOutcome {
    pub u: Vec<f64>,
    pub iterations: usize,
    pub converged: bool,
    /// `max |F|` at the start iterate and after every iteration.
    pub residual_history: Vec<f64>,
}

/// Branch value with its right and left derivatives in `u`.
///
/// Away from the previous input both derivatives equal `branch_slope`. At a
/// turning point exactly one of them counts the plays pinned on that side,
/// which is what keeps Newton from seeing a flat Jacobian there.
#[derive(Debug, Clone, Copy)]
struct DirectedBranch {
    value: f64,
    right: f64,
    left: f64,
}

fn directed_branch(model: &Model, curve: &MemoryCurve, u: f64) -> DirectedBranch {
    let w = model.gmap.eval(u);
    let grid = curve.grid();
    let tie = 1e-14 * grid.lambda();
    let density = &model.density;
    let mut value = 0.0;
    let mut right = 0.0;
    let mut left = 0.0;
    for (r, &xi) in grid.nodes().zip(curve.values()) {
        let lo = w - r;
        let hi = w + r;
        let next = xi.min(hi).max(lo);
        value += density.psi_raw(r, next);
        let up = lo >= xi - tie || hi < xi - tie;
        let down = lo > xi + tie || hi <= xi + tie;
        if up || down {
            let rho = density.rho(r, next);
            if up {
                right += rho;
            }
            if down {
                left += rho;
            }
        }
    }
    let scale = model.gmap.derivative(u) * grid.spacing();
    DirectedBranch {
        value: density.gbar() + grid.spacing() * value,
        right: scale * right,
        left: scale * left,
    }
}

fn branch_values(model: &Model, memory: &[MemoryCurve], u: &[f64]) -> Vec<DirectedBranch> {
    memory
        .par_iter()
        .zip(u.par_iter())
        .with_min_len(PAR_CHUNK)
        .map(|(c, &uk)| directed_branch(model, c, uk))
        .collect()
}

/// `F = B - s_prev - tau * laplacian(u)` together with the branch data.
fn residual_with_branch(
    model: &Model,
    state: &SimState,
    u: &[f64],
    tau: f64,
    lap: &mut [f64],
) -> (Vec<f64>, Vec<DirectedBranch>) {
    let branch = branch_values(model, &state.memory, u);
    apply_laplacian(&model.grid, u, lap);
    let f = branch
        .iter()
        .zip(state.s.values())
        .zip(lap.iter())
        .map(|((b, s), l)| b.value - s - tau * l)
        .collect();
    (f, branch)
}

fn sup_norm(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}

fn l2_norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

fn tolerance(state: &SimState, opts: &SolverOptions) -> f64 {
    opts.tol_abs + opts.tol_rel * state.s.max_abs()
}

/// Residual of the backward Euler system for a candidate pressure.
pub fn residual_eval(
    model: &Model,
    state: &SimState,
    u_cand: &ScalarField,
    tau: f64,
) -> Result<ScalarField> {
    if *u_cand.grid() != model.grid || *state.grid() != model.grid {
        return Err(StepError::Invalid(
            "fields are not on the model grid".into(),
        ));
    }
    let mut lap = vec![0.0; model.grid.len()];
    let (f, _) = residual_with_branch(model, state, u_cand.values(), tau, &mut lap);
    Ok(ScalarField::from_values(model.grid, f)?)
}

fn check_step_inputs(
    model: &Model,
    state: &SimState,
    tau: f64,
    opts: &SolverOptions,
) -> Result<()> {
    if !(tau > 0.0 && tau.is_finite()) {
        return Err(StepError::Invalid(format!(
            "tau must be positive, got {tau}"
        )));
    }
    if *state.grid() != model.grid || state.memory.len() != model.grid.len() {
        return Err(StepError::Invalid(
            "state does not match the model grid".into(),
        ));
    }
    opts.validate()
}

/// Damped Newton from `u_prev` with Armijo halving on `|F|_2`.
///
/// The Jacobian is `diag(max(B'_dir, eps_deg)) - tau * laplacian`, where
/// `B'_dir` is the one-sided branch slope in the direction that decreases
/// the local residual. Stops without error on stall; the caller decides.
pub fn solve_newton(
    model: &Model,
    state: &SimState,
    tau: f64,
    opts: &SolverOptions,
) -> Result<SolveOutcome> {
    check_step_inputs(model, state, tau, opts)?;
    let tol = tolerance(state, opts);
    let lambda = model.lambda();
    let n = model.grid.len();
    let mut lap = vec![0.0; n];
    let mut u = state.u.values().to_vec();
    let (mut f, mut branch) = residual_with_branch(model, state, &u, tau, &mut lap);
    let mut history = vec![sup_norm(&f)];
    if history[0] <= tol {
        return Ok(SolveOutcome {
            u,
            iterations: 0,
            converged: true,
            residual_history: history,
        });
    }
    let mut norm2 = l2_norm(&f);
    for it in 1..=opts.max_newton {
        let diag: Vec<f64> = branch
            .iter()
            .zip(&f)
            .map(|(b, &fk)| {
                let slope = if fk < 0.0 { b.right } else { b.left };
                slope.max(opts.eps_deg)
            })
            .collect();
        let rhs: Vec<f64> = f.iter().map(|x| -x).collect();
        let delta = match spd_solve(
            &model.grid,
            &diag,
            tau,
            &rhs,
            opts.inner_tol,
            opts.inner_max_iter,
        ) {
            Ok(d) => d,
            Err(_) => break,
        };

        let mut alpha = 1.0;
        let mut accepted = None;
        for _ in 0..40 {
            let trial: Vec<f64> = u
                .iter()
                .zip(&delta)
                .map(|(a, d)| (a + alpha * d).clamp(-lambda, lambda))
                .collect();
            let (ft, bt) = residual_with_branch(model, state, &trial, tau, &mut lap);
            let nt = l2_norm(&ft);
            if nt <= (1.0 - 1e-4 * alpha) * norm2 {
                accepted = Some((trial, ft, bt, nt));
                break;
            }
            alpha *= 0.5;
        }
        let Some((trial, ft, bt, nt)) = accepted else {
            return Ok(SolveOutcome {
                u,
                iterations: it,
                converged: false,
                residual_history: history,
            });
        };
        u = trial;
        f = ft;
        branch = bt;
        norm2 = nt;
        history.push(sup_norm(&f));
        if *history.last().unwrap() <= tol {
            return Ok(SolveOutcome {
                u,
                iterations: it,
                converged: true,
                residual_history: history,
            });
        }
    }
    Ok(SolveOutcome {
        u,
        iterations: opts.max_newton,
        converged: false,
        residual_history: history,
    })
}

/// Fixed-point iteration `(omega - tau laplacian) u_{k+1} = omega u_k - (B(u_k) - s_prev)`.
///
/// With `omega >= sup B'` the map is monotone and contractive on the
/// nonconstant modes, so it converges from any start.
pub fn solve_relaxation(
    model: &Model,
    state: &SimState,
    tau: f64,
    opts: &SolverOptions,
    start: &[f64],
) -> Result<SolveOutcome> {
    check_step_inputs(model, state, tau, opts)?;
    if start.len() != model.grid.len() {
        return Err(StepError::Invalid(
            "start iterate has the wrong length".into(),
        ));
    }
    let tol = tolerance(state, opts);
    let lambda = model.lambda();
    let omega = opts.relax_omega;
    let diag = vec![omega; model.grid.len()];
    let mut lap = vec![0.0; model.grid.len()];
    let mut u = start.to_vec();
    let (mut f, mut branch) = residual_with_branch(model, state, &u, tau, &mut lap);
    let mut history = vec![sup_norm(&f)];
    for it in 1..=opts.max_relax {
        if *history.last().unwrap() <= tol {
            return Ok(SolveOutcome {
                u,
                iterations: it - 1,
                converged: true,
                residual_history: history,
            });
        }
        let rhs: Vec<f64> = u
            .iter()
            .zip(&branch)
            .zip(state.s.values())
            .map(|((uk, b), s)| omega * uk - (b.value - s))
            .collect();
        let next = spd_solve(
            &model.grid,
            &diag,
            tau,
            &rhs,
            opts.inner_tol,
            opts.inner_max_iter,
        )?;
        u = next.into_iter().map(|x| x.clamp(-lambda, lambda)).collect();
        (f, branch) = residual_with_branch(model, state, &u, tau, &mut lap);
        history.push(sup_norm(&f));
    }
    let converged = *history.last().unwrap() <= tol;
    Ok(SolveOutcome {
        u,
        iterations: opts.max_relax,
        converged,
        residual_history: history,
    })
}

/// Advances the state by one backward Euler step and commits the memory.
pub fn step(
    model: &Model,
    state: &SimState,
    tau: f64,
    opts: &SolverOptions,
) -> Result<(SimState, StepReport)> {
    let newton = solve_newton(model, state, tau, opts)?;
    let mut history = newton.residual_history.clone();
    let (u_next, relax_iters) = if newton.converged {
        (newton.u, 0)
    } else {
        let relax = solve_relaxation(model, state, tau, opts, &newton.u)?;
        history.extend_from_slice(&relax.residual_history[1..]);
        if !relax.converged {
            return Err(StepError::SolverFailed {
                step: state.step_index + 1,
                residual_history: history,
            });
        }
        (relax.u, relax.iterations)
    };
    let final_residual = *history.last().unwrap();
    commit(
        model,
        state,
        tau,
        u_next,
        newton.iterations,
        relax_iters,
        final_residual,
        history,
    )
}

#[allow(clippy::too_many_arguments)]
fn commit(
    model: &Model,
    state: &SimState,
    tau: f64,
    u_next: Vec<f64>,
    newton_iters: usize,
    relax_iters: usize,
    final_residual: f64,
    residual_history: Vec<f64>,
) -> Result<(SimState, StepReport)> {
    let grid = model.grid;
    let h = grid.cell_measure();
    let gmap = &model.gmap;
    let density = &model.density;
    let orlicz = orlicz_functions(grid.dim(), tau)?;
    let p = orlicz.exponent();

    struct CellUpdate {
        curve: MemoryCurve,
        s: f64,
        dissipation: f64,
        energy: f64,
        q: f64,
        lp: f64,
    }
    let cells: Vec<CellUpdate> = state
        .memory
        .par_iter()
        .zip(u_next.par_iter().zip(state.u.values().par_iter()))
        .with_min_len(PAR_CHUNK)
        .map(|(prev, (&un, &up))| {
            let w = gmap.eval(un);
            let curve = prev.update(w);
            let dw = w - gmap.eval(up);
            let du = un - up;
            CellUpdate {
                s: preisach_output(&curve, density),
                dissipation: dissipation_increment(prev, &curve, density),
                energy: stored_energy(&curve, density),
                q: orlicz.q(dw.abs() / tau),
                lp: (du.abs() / tau).powf(p),
                curve,
            }
        })
        .collect();

    let mut lap = vec![0.0; grid.len()];
    apply_laplacian(&grid, &u_next, &mut lap);
    let mut memory = Vec::with_capacity(cells.len());
    let mut s = Vec::with_capacity(cells.len());
    let (mut dissipation, mut energy, mut q, mut lp) = (0.0, 0.0, 0.0, 0.0);
    for c in cells {
        dissipation += c.dissipation;
        energy += c.energy;
        q += c.q;
        lp += c.lp;
        s.push(c.s);
        memory.push(c.curve);
    }
    let u = ScalarField::from_values(grid, u_next)?;
    let s = ScalarField::from_values(grid, s)?;
    let report = StepReport {
        newton_iters,
        relax_iters,
        final_residual,
        residual_history,
        dissipation: dissipation * h,
        stored_energy: energy * h,
        mass: integrate(&s),
        gradient_energy: gradient_energy(&u),
        orlicz_increment: q * h,
        lp_increment: tau * lp * h,
        max_abs_laplacian: sup_norm(&lap),
    };
    let next = SimState {
        u,
        memory,
        s,
        t: state.t + tau,
        step_index: state.step_index + 1,
    };
    Ok((next, report))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hysteresis::{ConvexifiableMap, PreisachDensity, ThresholdGrid};
    use crate::spatial::Grid;
    use crate::stepper::{init_state, MemoryInit};
    use std::f64::consts::PI;

    fn model(nx: usize) -> Model {
        Model::new(
            Grid::line(nx, 1.0).unwrap(),
            ThresholdGrid::new(1.0, 64).unwrap(),
            PreisachDensity::uniform(1.0, 0.5, 1.0).unwrap(),
            ConvexifiableMap::identity(1.0),
            5.0,
        )
        .unwrap()
    }

    fn cosine_state(m: &Model) -> SimState {
        let u0 = ScalarField::from_fn(m.grid, |x, _| 0.1 * (PI * x).cos());
        init_state(m, u0, MemoryInit::AutoAdmissible).unwrap()
    }

    #[test]
    fn constant_state_is_a_fixed_point() {
        let m = model(16);
        let st = init_state(
            &m,
            ScalarField::constant(m.grid, 0.3),
            MemoryInit::VirginClamped,
        )
        .unwrap();
        let opts = SolverOptions::for_model(&m);
        let (next, rep) = step(&m, &st, 1e-3, &opts).unwrap();
        assert_eq!(next.u, st.u);
        assert_eq!(next.s, st.s);
        assert_eq!(rep.newton_iters, 0);
        assert_eq!(rep.dissipation, 0.0);
    }

    #[test]
    fn residual_of_constant_candidate_is_monotone() {
        let m = model(16);
        let st = init_state(
            &m,
            ScalarField::constant(m.grid, 0.3),
            MemoryInit::VirginClamped,
        )
        .unwrap();
        let f = residual_eval(&m, &st, &ScalarField::constant(m.grid, 0.4), 1e-2).unwrap();
        let f0 = f.values()[0];
        assert!(f0 > 0.0);
        assert!(f.values().iter().all(|&x| x == f0));
    }

    #[test]
    fn residual_integral_ignores_diffusion() {
        let m = model(32);
        let st = cosine_state(&m);
        let cand = ScalarField::from_fn(m.grid, |x, _| 0.05 * (3.0 * x).sin());
        let tau = 0.1;
        let f = residual_eval(&m, &st, &cand, tau).unwrap();
        let b: f64 = cand
            .values()
            .iter()
            .zip(&st.memory)
            .map(|(&u, c)| crate::hysteresis::branch_value(c, &m.density, &m.gmap, u))
            .zip(st.s.values())
            .map(|(b, s)| b - s)
            .sum::<f64>()
            * m.grid.cell_measure();
        assert!((integrate(&f) - b).abs() <= 1e-15);
    }

    #[test]
    fn cosine_step_conserves_mass_and_decreases_energy() {
        let m = model(128);
        let st = cosine_state(&m);
        let opts = SolverOptions::for_model(&m);
        let (next, rep) = step(&m, &st, 1e-3, &opts).unwrap();
        assert!(rep.final_residual <= opts.tol_abs + opts.tol_rel * st.s.max_abs());
        assert!((rep.mass - integrate(&st.s)).abs() <= 1e-9);
        assert!(rep.gradient_energy <= gradient_energy(&st.u));
        assert!(rep.dissipation >= 0.0);
        for (c, &s) in next.memory.iter().zip(next.s.values()) {
            assert!((preisach_output(c, &m.density) - s).abs() <= 1e-12);
        }
    }

    #[test]
    fn newton_and_relaxation_agree() {
        let m = model(32);
        let st = cosine_state(&m);
        let opts = SolverOptions {
            max_relax: 20000,
            ..SolverOptions::for_model(&m)
        };
        let tau = 1e-3;
        let a = solve_newton(&m, &st, tau, &opts).unwrap();
        let b = solve_relaxation(&m, &st, tau, &opts, st.u.values()).unwrap();
        assert!(a.converged && b.converged);
        let tol = tolerance(&st, &opts);
        let diff =
            a.u.iter()
                .zip(&b.u)
                .fold(0.0f64, |m, (x, y)| m.max((x - y).abs()));
        // residual tolerance over the smallest effective slope bounds the gap
        assert!(
            diff <= 10.0 * tol / (m.density.rho0() * m.thresholds.spacing() * 0.5),
            "{diff}"
        );
    }
}
