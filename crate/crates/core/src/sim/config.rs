use std::f64::consts::PI;
use std::path::{Path, PathBuf};

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use super::{read_memory_csv, Result, SimError};
use crate::hysteresis::{
    ConvexifiableMap, DensityKind, PreisachDensity, TabulatedDensity, ThresholdGrid,
};
use crate::spatial::{Grid, ScalarField};
use crate::stepper::{MemoryInit, Model, SolverOptions};

fn default_one() -> usize {
    1
}

fn default_unit() -> f64 {
    1.0
}

fn default_memory_mode() -> String {
    "auto_admissible".into()
}

fn empty_params() -> Value {
    Value::Object(Default::default())
}

/// A single JSON scenario document. Unknown keys are rejected.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub dim: usize,
    pub nx: usize,
    #[serde(default = "default_one")]
    pub ny: usize,
    pub lx: f64,
    #[serde(default = "default_unit")]
    pub ly: f64,
    pub tau: f64,
    #[serde(default)]
    pub t_end: Option<f64>,
    /// Steady detection threshold; zero disables detection.
    #[serde(default)]
    pub steady_tol: Option<f64>,
    pub thresholds: usize,
    pub lambda: f64,
    pub density: DensitySpec,
    #[serde(default)]
    pub gmap: GmapSpec,
    pub compat_l: f64,
    pub initial: InitialSpec,
    /// `auto_admissible`, `virgin_clamped`, or a path to a memory CSV.
    #[serde(default = "default_memory_mode")]
    pub memory_mode: String,
    /// Snapshot period in steps; zero writes only the first and last state.
    #[serde(default)]
    pub snapshot_every: usize,
    #[serde(default)]
    pub out_dir: Option<String>,
    #[serde(default)]
    pub solver: SolverOverrides,
    /// Directory relative paths in the document resolve against.
    #[serde(skip)]
    pub base_dir: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DensitySpec {
    pub kind: String,
    pub rho0: f64,
    pub rho1: f64,
    #[serde(default)]
    pub gbar: f64,
    #[serde(default = "empty_params")]
    pub params: Value,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GmapSpec {
    pub kind: String,
    #[serde(default = "empty_params")]
    pub params: Value,
}

impl Default for GmapSpec {
    fn default() -> Self {
        Self {
            kind: "identity".into(),
            params: empty_params(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InitialSpec {
    pub kind: String,
    #[serde(default = "empty_params")]
    pub params: Value,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverOverrides {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tol_abs: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tol_rel: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_newton: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub eps_deg: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub relax_omega: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_relax: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub inner_tol: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub inner_max_iter: Option<usize>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct UniformParams {
    value: Option<f64>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct SeparableParams {
    r_coeffs: Vec<f64>,
    v_coeffs: Vec<f64>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct TabulatedDensityParams {
    r: Vec<f64>,
    v: Vec<f64>,
    values: Vec<Vec<f64>>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct CubicParams {
    a: f64,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct TabulatedMapParams {
    u: Vec<f64>,
    g: Vec<f64>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct ConstantParams {
    c: f64,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct CosineParams {
    a: f64,
    #[serde(default = "default_one")]
    k: usize,
    #[serde(default)]
    ky: usize,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct GaussianParams {
    a: f64,
    sigma: f64,
    x0: f64,
    #[serde(default)]
    y0: f64,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct StepParams {
    a: f64,
    x0: f64,
}

fn params<T: DeserializeOwned>(what: &str, kind: &str, v: &Value) -> Result<T> {
    serde_json::from_value(v.clone())
        .map_err(|e| SimError::Config(format!("{what} '{kind}' params: {e}")))
}

fn config_err(e: impl std::fmt::Display) -> SimError {
    SimError::Config(e.to_string())
}

impl Scenario {
    pub fn from_json_str(text: &str) -> Result<Self> {
        let s: Scenario = serde_json::from_str(text).map_err(config_err)?;
        s.validate()?;
        Ok(s)
    }

    /// Reads and validates a scenario; relative paths inside it resolve
    /// against the file's directory.
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| SimError::Io(format!("{}: {e}", path.display())))?;
        let mut s = Self::from_json_str(&text)?;
        s.base_dir = path.parent().map(Path::to_path_buf);
        Ok(s)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(SimError::Config(m));
        if !(self.dim == 1 || self.dim == 2) {
            return bad(format!("dim must be 1 or 2, got {}", self.dim));
        }
        if self.dim == 1 && self.ny != 1 {
            return bad(format!("ny must be 1 in 1D, got {}", self.ny));
        }
        for (name, v) in [
            ("lx", self.lx),
            ("ly", self.ly),
            ("tau", self.tau),
            ("lambda", self.lambda),
            ("compat_l", self.compat_l),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return bad(format!("{name} must be positive, got {v}"));
            }
        }
        match (self.t_end, self.steady_tol) {
            (None, None) => return bad("one of t_end or steady_tol is required".into()),
            (None, Some(0.0)) => {
                return bad("steady_tol = 0 disables detection, so t_end is required".into())
            }
            (Some(t), _) if !(t > 0.0 && t.is_finite()) => {
                return bad(format!("t_end must be positive, got {t}"))
            }
            (_, Some(tol)) if !(tol >= 0.0 && tol.is_finite()) => {
                return bad(format!("steady_tol must be non-negative, got {tol}"))
            }
            _ => {}
        }
        if self.thresholds < 2 {
            return bad(format!(
                "thresholds must be at least 2, got {}",
                self.thresholds
            ));
        }
        self.build_model()?;
        Ok(())
    }

    pub fn grid(&self) -> Result<Grid> {
        match self.dim {
            1 => Grid::line(self.nx, self.lx),
            _ => Grid::rect(self.nx, self.ny, self.lx, self.ly),
        }
        .map_err(config_err)
    }

    pub fn build_density(&self) -> Result<PreisachDensity> {
        let d = &self.density;
        let kind = match d.kind.as_str() {
            "uniform" => {
                let p: UniformParams = params("density", &d.kind, &d.params)?;
                DensityKind::Uniform {
                    value: p.value.unwrap_or(d.rho0),
                }
            }
            "separable" => {
                let p: SeparableParams = params("density", &d.kind, &d.params)?;
                DensityKind::Separable {
                    r_coeffs: p.r_coeffs,
                    v_coeffs: p.v_coeffs,
                }
            }
            "tabulated" => {
                let p: TabulatedDensityParams = params("density", &d.kind, &d.params)?;
                DensityKind::Tabulated(
                    TabulatedDensity::new(p.r, p.v, p.values).map_err(config_err)?,
                )
            }
            other => return Err(SimError::Config(format!("unknown density kind '{other}'"))),
        };
        PreisachDensity::new(kind, d.rho0, d.rho1, d.gbar, self.lambda).map_err(config_err)
    }

    pub fn build_gmap(&self) -> Result<ConvexifiableMap> {
        let g = &self.gmap;
        match g.kind.as_str() {
            "identity" => {
                if !(g.params.is_null() || g.params.as_object().is_some_and(|m| m.is_empty())) {
                    return Err(SimError::Config("gmap 'identity' takes no params".into()));
                }
                Ok(ConvexifiableMap::identity(self.lambda))
            }
            "cubic_odd" => {
                let p: CubicParams = params("gmap", &g.kind, &g.params)?;
                ConvexifiableMap::cubic_odd(p.a, self.lambda).map_err(config_err)
            }
            "tabulated" => {
                let p: TabulatedMapParams = params("gmap", &g.kind, &g.params)?;
                ConvexifiableMap::tabulated(p.u, p.g, self.lambda).map_err(config_err)
            }
            other => Err(SimError::Config(format!("unknown gmap kind '{other}'"))),
        }
    }

    pub fn build_model(&self) -> Result<Model> {
        let thresholds = ThresholdGrid::new(self.lambda, self.thresholds).map_err(config_err)?;
        Model::new(
            self.grid()?,
            thresholds,
            self.build_density()?,
            self.build_gmap()?,
            self.compat_l,
        )
        .map_err(config_err)
    }

    pub fn initial_field(&self, grid: &Grid) -> Result<ScalarField> {
        let spec = &self.initial;
        let (lx, ly) = (self.lx, self.ly);
        let field = match spec.kind.as_str() {
            "constant" => {
                let p: ConstantParams = params("initial", &spec.kind, &spec.params)?;
                ScalarField::constant(*grid, p.c)
            }
            "cosine" => {
                let p: CosineParams = params("initial", &spec.kind, &spec.params)?;
                if self.dim == 1 && p.ky != 0 {
                    return Err(SimError::Config("cosine ky must be 0 in 1D".into()));
                }
                ScalarField::from_fn(*grid, |x, y| {
                    p.a * (p.k as f64 * PI * x / lx).cos() * (p.ky as f64 * PI * y / ly).cos()
                })
            }
            "gaussian" => {
                let p: GaussianParams = params("initial", &spec.kind, &spec.params)?;
                if !(p.sigma > 0.0) {
                    return Err(SimError::Config("gaussian sigma must be positive".into()));
                }
                let dim = self.dim;
                ScalarField::from_fn(*grid, |x, y| {
                    let dy = if dim == 1 { 0.0 } else { y - p.y0 };
                    let d2 = (x - p.x0).powi(2) + dy * dy;
                    p.a * (-d2 / (2.0 * p.sigma * p.sigma)).exp()
                })
            }
            "step" => {
                let p: StepParams = params("initial", &spec.kind, &spec.params)?;
                ScalarField::from_fn(*grid, |x, _| if x < p.x0 { p.a } else { 0.0 })
            }
            other => return Err(SimError::Config(format!("unknown initial kind '{other}'"))),
        };
        if let Some(k) = field.values().iter().position(|v| !v.is_finite()) {
            return Err(SimError::Config(format!(
                "initial value at cell {k} is not finite"
            )));
        }
        Ok(field)
    }

    pub fn memory_init(&self, model: &Model) -> Result<MemoryInit> {
        match self.memory_mode.as_str() {
            "auto_admissible" => Ok(MemoryInit::AutoAdmissible),
            "virgin_clamped" => Ok(MemoryInit::VirginClamped),
            path => {
                let p = Path::new(path);
                let full = match (&self.base_dir, p.is_relative()) {
                    (Some(base), true) => base.join(p),
                    _ => p.to_path_buf(),
                };
                let curves = read_memory_csv(&full, model.thresholds, model.grid.len())?;
                Ok(MemoryInit::Curves(curves))
            }
        }
    }

    pub fn solver_options(&self, model: &Model) -> Result<SolverOptions> {
        let o = &self.solver;
        let mut opts = SolverOptions::for_model(model);
        if let Some(v) = o.tol_abs {
            opts.tol_abs = v;
        }
        if let Some(v) = o.tol_rel {
            opts.tol_rel = v;
        }
        if let Some(v) = o.max_newton {
            opts.max_newton = v;
        }
        if let Some(v) = o.eps_deg {
            opts.eps_deg = v;
        }
        if let Some(v) = o.relax_omega {
            opts.relax_omega = v;
        }
        if let Some(v) = o.max_relax {
            opts.max_relax = v;
        }
        if let Some(v) = o.inner_tol {
            opts.inner_tol = v;
        }
        if let Some(v) = o.inner_max_iter {
            opts.inner_max_iter = v;
        }
        opts.validate().map_err(config_err)?;
        Ok(opts)
    }

    /// Number of steps to reach `t_end`, if set.
    pub fn step_budget(&self) -> Option<usize> {
        self.t_end
            .map(|t| ((t / self.tau) * (1.0 - 1e-12)).ceil().max(1.0) as usize)
    }
}
