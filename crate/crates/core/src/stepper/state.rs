use rayon::prelude::*;

use super::{Result, StepError};
use crate::hysteresis::{
    admissible_memory, preisach_output, validate_hypothesis, Condition, ConvexifiableMap,
    HypothesisReport, MemoryCurve, PreisachDensity, ThresholdGrid,
};
use crate::spatial::{laplacian, Grid, ScalarField};

/// Cells per rayon task; below this the per-cell work is not worth a split.
pub(crate) const PAR_CHUNK: usize = 64;

/// Everything that stays fixed during a run.
#[derive(Debug, Clone, PartialEq)]
pub struct Model {
    pub grid: Grid,
    pub thresholds: ThresholdGrid,
    pub density: PreisachDensity,
    pub gmap: ConvexifiableMap,
    /// Compatibility constant `L` of the initial memory.
    pub compat_l: f64,
}

impl Model {
    pub fn new(
        grid: Grid,
        thresholds: ThresholdGrid,
        density: PreisachDensity,
        gmap: ConvexifiableMap,
        compat_l: f64,
    ) -> Result<Self> {
        let lambda = thresholds.lambda();
        if density.lambda() != lambda {
            return Err(StepError::Invalid(format!(
                "density is defined for Lambda = {}, thresholds for {lambda}",
                density.lambda()
            )));
        }
        if !(compat_l > 0.0 && compat_l.is_finite()) {
            return Err(StepError::Invalid(format!(
                "compatibility constant must be positive, got {compat_l}"
            )));
        }
        Ok(Self {
            grid,
            thresholds,
            density,
            gmap,
            compat_l,
        })
    }

    pub fn lambda(&self) -> f64 {
        self.thresholds.lambda()
    }

    /// `c = rho1 * Lambda * g^*`, the upper constant of the two-sided estimate.
    pub fn capacity_constant(&self) -> f64 {
        self.density.rho1() * self.lambda() * self.gmap.upper_slope()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimState {
    pub u: ScalarField,
    pub memory: Vec<MemoryCurve>,
    /// Cached `preisach_output` of each memory curve.
    pub s: ScalarField,
    pub t: f64,
    pub step_index: usize,
}

impl SimState {
    pub fn grid(&self) -> &Grid {
        self.u.grid()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum MemoryInit {
    /// Memory pinned to depth `sqrt|laplacian(u0)| / L` in the direction of motion.
    AutoAdmissible,
    /// `sign(w0) (|w0| - r)^+`; only compatible where `laplacian(u0) = 0`.
    VirginClamped,
    /// One curve per cell, in `w = g(u)` coordinates.
    Curves(Vec<MemoryCurve>),
}

/// Builds the initial state and checks the compatibility hypothesis at every cell.
///
/// Memory curves live in the transformed input `w = g(u)`.
pub fn init_state(model: &Model, u0: ScalarField, init: MemoryInit) -> Result<SimState> {
    if *u0.grid() != model.grid {
        return Err(StepError::Invalid(
            "initial field is not on the model grid".into(),
        ));
    }
    let lambda = model.lambda();
    let lap = laplacian(&u0);
    let n = model.grid.len();
    let mut report = HypothesisReport::default();
    for (k, &u) in u0.values().iter().enumerate() {
        if u.abs() > lambda {
            let mut r = HypothesisReport::default();
            r.push(Condition::LambdaFeasibility, u.abs() - lambda);
            report.merge(r.with_cell(k));
        }
    }
    if !report.ok() {
        return Err(StepError::Hypothesis(report));
    }

    let w0: Vec<f64> = u0.values().iter().map(|&u| model.gmap.eval(u)).collect();
    let memory: Vec<MemoryCurve> = match init {
        MemoryInit::AutoAdmissible => {
            let mut curves = Vec::with_capacity(n);
            for (k, (&w, &l)) in w0.iter().zip(lap.values()).enumerate() {
                match admissible_memory(w, l, model.compat_l, model.thresholds) {
                    Ok(c) => curves.push(c),
                    Err(_) => {
                        let depth = l.abs().sqrt() / model.compat_l;
                        let mut r = HypothesisReport::default();
                        if depth > lambda {
                            r.push(Condition::C1, depth - lambda);
                        } else {
                            let peak = w - l.signum() * depth;
                            r.push(Condition::LambdaFeasibility, depth + peak.abs() - lambda);
                        }
                        report.merge(r.with_cell(k));
                        curves.push(MemoryCurve::clamped(model.thresholds, w));
                    }
                }
            }
            curves
        }
        MemoryInit::VirginClamped => w0
            .iter()
            .map(|&w| MemoryCurve::clamped(model.thresholds, w))
            .collect(),
        MemoryInit::Curves(curves) => {
            if curves.len() != n {
                return Err(StepError::Invalid(format!(
                    "memory has {} curves for {n} cells",
                    curves.len()
                )));
            }
            if let Some(k) = curves.iter().position(|c| *c.grid() != model.thresholds) {
                return Err(StepError::Invalid(format!(
                    "memory curve {k} uses a different threshold grid"
                )));
            }
            curves
        }
    };

    for k in 0..n {
        let r = validate_hypothesis(&memory[k], w0[k], lap.values()[k], model.compat_l);
        report.merge(r.with_cell(k));
    }
    if !report.ok() {
        report.violations.sort_by_key(|v| v.cell);
        report
            .violations
            .dedup_by(|a, b| a.cell == b.cell && a.condition == b.condition);
        return Err(StepError::Hypothesis(report));
    }

    let s: Vec<f64> = memory
        .par_iter()
        .with_min_len(PAR_CHUNK)
        .map(|c| preisach_output(c, &model.density))
        .collect();
    Ok(SimState {
        s: ScalarField::from_values(model.grid, s)?,
        u: u0,
        memory,
        t: 0.0,
        step_index: 0,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverOptions {
    pub tol_abs: f64,
    pub tol_rel: f64,
    pub max_newton: usize,
    /// Floor for the Jacobian diagonal at turning points.
    pub eps_deg: f64,
    /// Majorant of `B'` used by the relaxation fallback.
    pub relax_omega: f64,
    pub max_relax: usize,
    /// Relative residual target of the inner linear solves.
    pub inner_tol: f64,
    pub inner_max_iter: usize,
}

impl SolverOptions {
    pub fn for_model(model: &Model) -> Self {
        let scale = model.density.rho1() * model.lambda();
        Self {
            tol_abs: 1e-11 * scale,
            tol_rel: 1e-10,
            max_newton: 20,
            eps_deg: 1e-10 * scale,
            relax_omega: model.capacity_constant(),
            max_relax: 500,
            inner_tol: 1e-12,
            inner_max_iter: 5000,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let floats = [
            ("tol_abs", self.tol_abs),
            ("tol_rel", self.tol_rel),
            ("eps_deg", self.eps_deg),
            ("relax_omega", self.relax_omega),
            ("inner_tol", self.inner_tol),
        ];
        for (name, v) in floats {
            if !(v > 0.0 && v.is_finite()) {
                return Err(StepError::Invalid(format!(
                    "{name} must be positive, got {v}"
                )));
            }
        }
        for (name, v) in [
            ("max_newton", self.max_newton),
            ("max_relax", self.max_relax),
            ("inner_max_iter", self.inner_max_iter),
        ] {
            if v == 0 {
                return Err(StepError::Invalid(format!("{name} must be positive")));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct StepReport {
    pub newton_iters: usize,
    pub relax_iters: usize,
    /// `max |F(u_next)|`.
    pub final_residual: f64,
    /// Residual sup-norm after every iteration, starting with `F(u_prev)`.
    pub residual_history: Vec<f64>,
    /// `D_i`, integrated over the domain.
    pub dissipation: f64,
    /// `E_i`, integrated over the domain.
    pub stored_energy: f64,
    pub mass: f64,
    /// `V_i`
    pub gradient_energy: f64,
    /// `int Q(|w_i - w_{i-1}| / tau) dx`
    pub orlicz_increment: f64,
    /// `tau * int |(u_i - u_{i-1}) / tau|^p dx`
    pub lp_increment: f64,
    pub max_abs_laplacian: f64,
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    pub(crate) fn cosine_model(nx: usize, compat_l: f64) -> Model {
        Model::new(
            Grid::line(nx, 1.0).unwrap(),
            ThresholdGrid::new(1.0, 64).unwrap(),
            PreisachDensity::uniform(1.0, 0.5, 1.0).unwrap(),
            ConvexifiableMap::identity(1.0),
            compat_l,
        )
        .unwrap()
    }

    #[test]
    fn auto_admissible_cosine_passes() {
        let m = cosine_model(64, 5.0);
        let u0 = ScalarField::from_fn(m.grid, |x, _| 0.1 * (PI * x).cos());
        let st = init_state(&m, u0, MemoryInit::AutoAdmissible).unwrap();
        for (c, &s) in st.memory.iter().zip(st.s.values()) {
            assert_eq!(preisach_output(c, &m.density), s);
        }
    }

    #[test]
    fn virgin_clamped_cosine_fails_c2() {
        let m = cosine_model(64, 5.0);
        let u0 = ScalarField::from_fn(m.grid, |x, _| 0.1 * (PI * x).cos());
        match init_state(&m, u0, MemoryInit::VirginClamped) {
            Err(StepError::Hypothesis(rep)) => {
                assert!(rep.has(Condition::C2));
                assert!(rep.violations.len() >= 32);
            }
            other => panic!("expected hypothesis failure, got {other:?}"),
        }
    }

    #[test]
    fn constant_state_is_compatible_with_virgin_clamped() {
        let m = cosine_model(16, 1.0);
        let st = init_state(
            &m,
            ScalarField::constant(m.grid, 0.3),
            MemoryInit::VirginClamped,
        );
        assert!(st.is_ok());
    }

    #[test]
    fn out_of_range_initial_value() {
        let m = cosine_model(16, 1.0);
        let err = init_state(
            &m,
            ScalarField::constant(m.grid, 1.5),
            MemoryInit::VirginClamped,
        )
        .unwrap_err();
        assert_eq!(err.exit_code(), 3);
    }

    #[test]
    fn default_options_are_valid() {
        let m = cosine_model(16, 1.0);
        let o = SolverOptions::for_model(&m);
        assert!(o.validate().is_ok());
        assert_eq!(o.relax_omega, 1.0);
        let bad = SolverOptions { max_newton: 0, ..o };
        assert!(bad.validate().is_err());
    }
}
