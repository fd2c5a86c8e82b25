use serde::Serialize;

use super::{Result, SimError};
use crate::hysteresis::{memory_distance, MemoryCurve};
use crate::stepper::StepReport;

/// Trailing window, in steps, of the steady-state test on the mean pressure.
pub const STEADY_WINDOW: usize = 100;

/// One row of `timeseries.csv`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TimeSeriesRecord {
    pub step: usize,
    pub t: f64,
    pub mass: f64,
    #[serde(rename = "V")]
    pub v: f64,
    #[serde(rename = "E")]
    pub e: f64,
    #[serde(rename = "D_cum")]
    pub d_cum: f64,
    #[serde(rename = "U_mean")]
    pub u_mean: f64,
    pub orlicz_budget: f64,
    pub newton_iters: usize,
    pub residual: f64,
}

/// First time at which `V <= tol^2` and the mean pressure moved by at most
/// `tol` over the trailing `window` steps. `tol <= 0` never fires.
pub fn steady_detect(series: &[TimeSeriesRecord], tol: f64, window: usize) -> Option<f64> {
    if !(tol > 0.0) {
        return None;
    }
    (window..series.len())
        .find(|&i| {
            series[i].v <= tol * tol && (series[i].u_mean - series[i - window].u_mean).abs() <= tol
        })
        .map(|i| series[i].t)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DecayFit {
    /// Least-squares decay rate of `V`.
    pub mu_hat: f64,
    /// `ln(1 + mu1 tau / c) / tau`
    pub bound_rate: f64,
    pub points: usize,
}

/// Fits `ln V(t)` by a straight line over the records with
/// `V in [1e-20, V_0 / 2]`.
pub fn decay_fit(series: &[TimeSeriesRecord], mu1: f64, tau: f64, c: f64) -> Result<DecayFit> {
    let usable = series.iter().filter(|r| r.v > 1e-30).count();
    if usable < 10 {
        return Err(SimError::InsufficientData(format!(
            "decay fit needs at least 10 records with V > 1e-30, got {usable}"
        )));
    }
    let v0 = series[0].v;
    let pts: Vec<(f64, f64)> = series
        .iter()
        .filter(|r| r.v >= 1e-20 && r.v <= 0.5 * v0)
        .map(|r| (r.t, r.v.ln()))
        .collect();
    if pts.len() < 2 {
        return Err(SimError::InsufficientData(format!(
            "only {} records in the fit window",
            pts.len()
        )));
    }
    let n = pts.len() as f64;
    let tm = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let ym = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = pts.iter().map(|(t, y)| (t - tm) * (y - ym)).sum();
    let sxx: f64 = pts.iter().map(|(t, _)| (t - tm) * (t - tm)).sum();
    if sxx == 0.0 {
        return Err(SimError::InsufficientData(
            "fit window spans no time".into(),
        ));
    }
    Ok(DecayFit {
        mu_hat: -sxy / sxx,
        bound_rate: (mu1 * tau / c).ln_1p() / tau,
        points: pts.len(),
    })
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize)]
pub struct Budget {
    /// `sum_i tau int Q(|w_i - w_{i-1}| / tau) dx`
    pub orlicz: f64,
    /// `sum_i tau int |u_t|^p dx`
    pub lp: f64,
}

pub fn orlicz_budget(reports: &[StepReport], tau: f64) -> Budget {
    reports.iter().fold(Budget::default(), |b, r| Budget {
        orlicz: b.orlicz + tau * r.orlicz_increment,
        lp: b.lp + r.lp_increment,
    })
}

/// `int dr-weighted |xi - xi_final| dx` summed over cells of measure `h`.
pub fn omega_bar(memory: &[MemoryCurve], reference: &[MemoryCurve], h: f64) -> Result<f64> {
    if memory.len() != reference.len() {
        return Err(SimError::InsufficientData(
            "memory snapshots have different cell counts".into(),
        ));
    }
    let mut sum = 0.0;
    for (a, b) in memory.iter().zip(reference) {
        sum += memory_distance(a, b).map_err(|e| SimError::InsufficientData(e.to_string()))?;
    }
    Ok(sum * h)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn record(step: usize, t: f64, v: f64, u_mean: f64) -> TimeSeriesRecord {
        TimeSeriesRecord {
            step,
            t,
            mass: 0.0,
            v,
            e: 0.0,
            d_cum: 0.0,
            u_mean,
            orlicz_budget: 0.0,
            newton_iters: 0,
            residual: 0.0,
        }
    }

    #[test]
    fn exact_exponential_is_recovered() {
        let tau = 0.01;
        let series: Vec<_> = (0..200)
            .map(|i| record(i, i as f64 * tau, (-3.0 * i as f64 * tau).exp(), 0.0))
            .collect();
        let fit = decay_fit(&series, 10.0, tau, 1.0).unwrap();
        assert!((fit.mu_hat - 3.0).abs() <= 1e-6);
        assert!((fit.bound_rate - (1.1f64).ln() / tau).abs() <= 1e-12);
    }

    #[test]
    fn short_series_is_rejected() {
        let series: Vec<_> = (0..5).map(|i| record(i, i as f64, 1.0, 0.0)).collect();
        assert!(decay_fit(&series, 1.0, 1.0, 1.0).is_err());
    }

    #[test]
    fn steady_detection() {
        let series: Vec<_> = (0..300).map(|i| record(i, i as f64, 0.0, 0.3)).collect();
        assert_eq!(steady_detect(&series, 1e-6, 100), Some(100.0));
        assert_eq!(steady_detect(&series, 0.0, 100), None);
        let drifting: Vec<_> = (0..300)
            .map(|i| record(i, i as f64, 0.0, 1e-3 * i as f64))
            .collect();
        assert_eq!(steady_detect(&drifting, 1e-6, 100), None);
    }
}
