use std::path::{Path, PathBuf};

use serde::Serialize;
use serde_json::Value;

use super::diagnostics::{decay_fit, omega_bar, steady_detect, TimeSeriesRecord, STEADY_WINDOW};
use super::output::{write_json, write_memory_csv, write_snapshot_csv, SeriesWriter};
use super::refine::FieldRecord;
use super::{Result, Scenario};
use crate::hysteresis::{stored_energy, MemoryCurve};
use crate::spatial::{first_nonzero_eigenvalue, gradient_energy, integrate};
use crate::stepper::{init_state, step, Model, SimState, StepReport};

/// Step cap for runs that stop only on steady detection.
const MAX_STEPS: usize = 1_000_000;

#[derive(Debug, Clone, Default, PartialEq)]
pub struct RunOptions {
    pub out_dir: Option<PathBuf>,
    /// Keep `(u, s)` of every step in memory for interpolation.
    pub keep_trajectory: bool,
    /// Run to `t_end` even after steady detection fires.
    pub ignore_steady: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct OmegaBarPoint {
    pub step: usize,
    pub t: f64,
    pub omega_bar: f64,
}

/// Contents of `summary.json`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SummaryReport {
    pub u_bar: f64,
    pub decay_rate_fit: Option<f64>,
    pub decay_rate_bound: f64,
    pub orlicz_budget_total: f64,
    pub lp_budget_total: f64,
    pub dissipation_total: f64,
    pub steady_time: Option<f64>,
    pub steady_window: usize,
    pub omega_bar_series: Vec<OmegaBarPoint>,
    pub config_echo: Value,
}

#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub model: Model,
    pub summary: SummaryReport,
    pub series: Vec<TimeSeriesRecord>,
    pub reports: Vec<StepReport>,
    pub initial_state: SimState,
    pub final_state: SimState,
    pub trajectory: Vec<FieldRecord>,
    /// Largest `|u|` seen over the run.
    pub max_abs_u: f64,
    /// Largest excess of `|xi_j|` over `(Lambda - r_j)^+` seen over the run.
    pub max_cone_excess: f64,
}

pub fn run(scenario: &Scenario, out_dir: Option<&Path>) -> Result<RunOutcome> {
    run_with(
        scenario,
        &RunOptions {
            out_dir: out_dir.map(Path::to_path_buf),
            ..RunOptions::default()
        },
    )
}

fn total_energy(model: &Model, memory: &[MemoryCurve]) -> f64 {
    memory
        .iter()
        .map(|c| stored_energy(c, &model.density))
        .sum::<f64>()
        * model.grid.cell_measure()
}

fn cone_excess(memory: &[MemoryCurve]) -> f64 {
    memory
        .iter()
        .map(MemoryCurve::cone_excess)
        .fold(0.0, f64::max)
}

struct Snapshots<'a> {
    out: Option<&'a Path>,
    model: &'a Model,
    taken: Vec<(usize, f64, Vec<MemoryCurve>)>,
}

impl Snapshots<'_> {
    fn take(&mut self, state: &SimState) -> Result<()> {
        if let Some(dir) = self.out {
            let path = dir.join(format!("snapshot_{}.csv", state.step_index));
            write_snapshot_csv(&path, self.model, state)?;
        }
        self.taken
            .push((state.step_index, state.t, state.memory.clone()));
        Ok(())
    }
}

/// Initializes, steps to `t_end` or steady detection, and writes the outputs.
pub fn run_with(scenario: &Scenario, options: &RunOptions) -> Result<RunOutcome> {
    let model = scenario.build_model()?;
    let u0 = scenario.initial_field(&model.grid)?;
    let init = scenario.memory_init(&model)?;
    let opts = scenario.solver_options(&model)?;
    let state0 = init_state(&model, u0, init)?;
    let tau = scenario.tau;
    let h = model.grid.cell_measure();

    let out = options.out_dir.as_deref();
    if let Some(dir) = out {
        std::fs::create_dir_all(dir)
            .map_err(|e| super::SimError::Io(format!("{}: {e}", dir.display())))?;
    }
    let mut writer = match out {
        Some(dir) => Some(SeriesWriter::create(&dir.join("timeseries.csv"))?),
        None => None,
    };

    let mut series = vec![TimeSeriesRecord {
        step: 0,
        t: 0.0,
        mass: integrate(&state0.s),
        v: gradient_energy(&state0.u),
        e: total_energy(&model, &state0.memory),
        d_cum: 0.0,
        u_mean: state0.u.mean(),
        orlicz_budget: 0.0,
        newton_iters: 0,
        residual: 0.0,
    }];
    if let Some(w) = writer.as_mut() {
        w.push(&series[0])?;
    }
    let mut snaps = Snapshots {
        out,
        model: &model,
        taken: Vec::new(),
    };
    snaps.take(&state0)?;
    if let Some(dir) = out {
        write_memory_csv(&dir.join("memory_0.csv"), &state0.memory)?;
    }
    let mut trajectory = Vec::new();
    if options.keep_trajectory {
        trajectory.push(FieldRecord::of(&state0));
    }

    let max_steps = scenario.step_budget().unwrap_or(MAX_STEPS);
    let stop_tol = if options.ignore_steady {
        0.0
    } else {
        scenario.steady_tol.unwrap_or(0.0)
    };
    let mut max_abs_u = state0.u.max_abs();
    let mut max_cone = cone_excess(&state0.memory);
    let mut reports = Vec::new();
    let (mut d_cum, mut budget, mut lp) = (0.0, 0.0, 0.0);
    let mut state = state0.clone();

    for i in 1..=max_steps {
        let (mut next, rep) = step(&model, &state, tau, &opts)?;
        next.t = i as f64 * tau;
        d_cum += rep.dissipation;
        budget += tau * rep.orlicz_increment;
        lp += rep.lp_increment;
        let rec = TimeSeriesRecord {
            step: i,
            t: next.t,
            mass: rep.mass,
            v: rep.gradient_energy,
            e: rep.stored_energy,
            d_cum,
            u_mean: next.u.mean(),
            orlicz_budget: budget,
            newton_iters: rep.newton_iters,
            residual: rep.final_residual,
        };
        if let Some(w) = writer.as_mut() {
            w.push(&rec)?;
        }
        max_abs_u = max_abs_u.max(next.u.max_abs());
        max_cone = max_cone.max(cone_excess(&next.memory));
        let steady = stop_tol > 0.0
            && i >= STEADY_WINDOW
            && rec.v <= stop_tol * stop_tol
            && (rec.u_mean - series[i - STEADY_WINDOW].u_mean).abs() <= stop_tol;
        series.push(rec);
        reports.push(rep);
        if options.keep_trajectory {
            trajectory.push(FieldRecord::of(&next));
        }
        state = next;
        let last = steady || i == max_steps;
        if last || (scenario.snapshot_every > 0 && i % scenario.snapshot_every == 0) {
            snaps.take(&state)?;
        }
        if last {
            break;
        }
    }
    if let Some(dir) = out {
        write_memory_csv(
            &dir.join(format!("memory_{}.csv", state.step_index)),
            &state.memory,
        )?;
    }

    let mut omega_bar_series = Vec::with_capacity(snaps.taken.len());
    for (step, t, memory) in &snaps.taken {
        omega_bar_series.push(OmegaBarPoint {
            step: *step,
            t: *t,
            omega_bar: omega_bar(memory, &state.memory, h)?,
        });
    }
    let mu1 = first_nonzero_eigenvalue(&model.grid);
    let c = model.capacity_constant();
    let fit = decay_fit(&series, mu1, tau, c).ok();
    let summary = SummaryReport {
        u_bar: state.u.mean(),
        decay_rate_fit: fit.map(|f| f.mu_hat),
        decay_rate_bound: (mu1 * tau / c).ln_1p() / tau,
        orlicz_budget_total: budget,
        lp_budget_total: lp,
        dissipation_total: d_cum,
        steady_time: steady_detect(&series, scenario.steady_tol.unwrap_or(0.0), STEADY_WINDOW),
        steady_window: STEADY_WINDOW,
        omega_bar_series,
        config_echo: serde_json::to_value(scenario)
            .map_err(|e| super::SimError::Config(e.to_string()))?,
    };
    if let Some(dir) = out {
        write_json(&dir.join("summary.json"), &summary)?;
    }
    Ok(RunOutcome {
        model,
        summary,
        series,
        reports,
        initial_state: state0,
        final_state: state,
        trajectory,
        max_abs_u,
        max_cone_excess: max_cone,
    })
}
