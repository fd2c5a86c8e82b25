use std::path::Path;

use serde::Serialize;

use super::output::num;
use super::run::{run_with, RunOptions};
use super::{Result, Scenario, SimError};
use crate::stepper::SimState;

/// Pressure and saturation at one step.
#[derive(Debug, Clone, PartialEq)]
pub struct FieldRecord {
    pub step: usize,
    pub t: f64,
    pub u: Vec<f64>,
    pub s: Vec<f64>,
}

impl FieldRecord {
    pub fn of(state: &SimState) -> Self {
        Self {
            step: state.step_index,
            t: state.t,
            u: state.u.values().to_vec(),
            s: state.s.values().to_vec(),
        }
    }
}

/// Index `i` with `t_i <= t <= t_{i+1}` and a flag for an exact hit on `t_i`.
fn locate(records: &[FieldRecord], t: f64) -> Result<(usize, bool)> {
    let (first, last) = match (records.first(), records.last()) {
        (Some(a), Some(b)) => (a.t, b.t),
        _ => {
            return Err(SimError::InsufficientData(
                "no records to interpolate".into(),
            ));
        }
    };
    let snap = if records.len() > 1 {
        1e-9 * (records[1].t - records[0].t).abs()
    } else {
        0.0
    };
    if t < first - snap || t > last + snap {
        return Err(SimError::OutOfRange {
            t,
            start: first,
            end: last,
        });
    }
    let i = records.partition_point(|r| r.t <= t + snap);
    let i = i.saturating_sub(1);
    Ok((i, (records[i].t - t).abs() <= snap))
}

/// Piecewise-linear interpolant in time of `(u, s)`.
pub fn interpolate_output(records: &[FieldRecord], t: f64) -> Result<(Vec<f64>, Vec<f64>)> {
    let (i, exact) = locate(records, t)?;
    if exact || i + 1 == records.len() {
        return Ok((records[i].u.clone(), records[i].s.clone()));
    }
    let (a, b) = (&records[i], &records[i + 1]);
    let theta = (t - a.t) / (b.t - a.t);
    let lerp = |x: &[f64], y: &[f64]| -> Vec<f64> {
        x.iter().zip(y).map(|(p, q)| p + theta * (q - p)).collect()
    };
    Ok((lerp(&a.u, &b.u), lerp(&a.s, &b.s)))
}

/// Piecewise-constant interpolant: the value at the right end of the step
/// containing `t` (`t in (t_{i-1}, t_i]` gives step `i`).
pub fn interpolate_piecewise_constant(
    records: &[FieldRecord],
    t: f64,
) -> Result<(Vec<f64>, Vec<f64>)> {
    let (i, exact) = locate(records, t)?;
    let k = if exact || i + 1 == records.len() {
        i
    } else {
        i + 1
    };
    Ok((records[k].u.clone(), records[k].s.clone()))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RefinementRow {
    pub level: usize,
    pub tau: f64,
    pub tau_fine: f64,
    /// `max |u_tau(T) - u_{tau/2}(T)|`
    pub diff_inf_end: f64,
    /// The same difference maximized over the coarse output times.
    pub diff_inf_max: f64,
    /// Previous level's `diff_inf_end` over this one.
    pub ratio: Option<f64>,
}

fn sup_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).fold(0.0, |m, (x, y)| m.max((x - y).abs()))
}

/// Runs the scenario at `tau, tau/2, ...` (`levels` runs) up to `t_end` and
/// compares adjacent levels at the coarse output times.
pub fn tau_refinement(
    scenario: &Scenario,
    levels: usize,
    out_dir: Option<&Path>,
) -> Result<Vec<RefinementRow>> {
    if levels < 2 {
        return Err(SimError::Config(format!(
            "tau refinement needs at least 2 levels, got {levels}"
        )));
    }
    let Some(t_end) = scenario.t_end else {
        return Err(SimError::Config("tau refinement needs t_end".into()));
    };
    let opts = RunOptions {
        out_dir: None,
        keep_trajectory: true,
        ignore_steady: true,
    };
    let coarse_times: Vec<f64> = {
        let n = scenario.step_budget().unwrap_or(1);
        (1..=n).map(|i| i as f64 * scenario.tau).collect()
    };
    let end = *coarse_times.last().unwrap_or(&t_end);

    let mut rows = Vec::with_capacity(levels - 1);
    let mut prev = run_with(scenario, &opts)?.trajectory;
    for level in 1..levels {
        let mut fine_scenario = scenario.clone();
        fine_scenario.tau = scenario.tau / f64::powi(2.0, level as i32);
        let fine = run_with(&fine_scenario, &opts)?.trajectory;
        let mut diff_max: f64 = 0.0;
        for &t in &coarse_times {
            let (a, _) = interpolate_output(&prev, t)?;
            let (b, _) = interpolate_output(&fine, t)?;
            diff_max = diff_max.max(sup_diff(&a, &b));
        }
        let (a, _) = interpolate_output(&prev, end)?;
        let (b, _) = interpolate_output(&fine, end)?;
        let diff_end = sup_diff(&a, &b);
        let ratio = rows
            .last()
            .map(|r: &RefinementRow| r.diff_inf_end / diff_end);
        rows.push(RefinementRow {
            level: level - 1,
            tau: fine_scenario.tau * 2.0,
            tau_fine: fine_scenario.tau,
            diff_inf_end: diff_end,
            diff_inf_max: diff_max,
            ratio,
        });
        prev = fine;
    }

    if let Some(dir) = out_dir {
        std::fs::create_dir_all(dir)?;
        let path = dir.join("tau_refinement.csv");
        let mut w = csv::Writer::from_path(&path)?;
        w.write_record([
            "level",
            "tau",
            "tau_fine",
            "diff_inf_end",
            "diff_inf_max",
            "ratio",
        ])?;
        for r in &rows {
            w.write_record([
                r.level.to_string(),
                num(r.tau),
                num(r.tau_fine),
                num(r.diff_inf_end),
                num(r.diff_inf_max),
                r.ratio.map(num).unwrap_or_default(),
            ])?;
        }
        w.flush()?;
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn records() -> Vec<FieldRecord> {
        (0..4)
            .map(|i| FieldRecord {
                step: i,
                t: 0.1 * i as f64,
                u: vec![i as f64, -(i as f64)],
                s: vec![10.0 * i as f64, 0.0],
            })
            .collect()
    }

    #[test]
    fn step_boundaries_return_stored_fields() {
        let r = records();
        for rec in &r {
            let (u, s) = interpolate_output(&r, rec.t).unwrap();
            assert_eq!(u, rec.u);
            assert_eq!(s, rec.s);
            assert_eq!(interpolate_piecewise_constant(&r, rec.t).unwrap().0, rec.u);
        }
    }

    #[test]
    fn midpoint_is_the_mean() {
        let r = records();
        let (u, s) = interpolate_output(&r, 0.15).unwrap();
        assert!((u[0] - 1.5).abs() < 1e-12 && (u[1] + 1.5).abs() < 1e-12);
        assert!((s[0] - 15.0).abs() < 1e-12);
        let (u, _) = interpolate_piecewise_constant(&r, 0.15).unwrap();
        assert_eq!(u, r[2].u);
    }

    #[test]
    fn out_of_range() {
        let r = records();
        assert!(matches!(
            interpolate_output(&r, 0.5),
            Err(SimError::OutOfRange { .. })
        ));
        assert!(interpolate_output(&r, -0.01).is_err());
        assert!(interpolate_output(&[], 0.0).is_err());
    }
}
