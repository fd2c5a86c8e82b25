use super::{HysteresisError, Result};

const SIMPSON_PANELS: usize = 64;

/// Shape of the Preisach density `rho(r, v)`.
#[derive(Debug, Clone, PartialEq)]
pub enum DensityKind {
    /// `rho(r, v) = value`.
    Uniform { value: f64 },
    /// `rho(r, v) = A(r) * B(v)` with polynomial factors given by ascending
    /// coefficients.
    Separable {
        r_coeffs: Vec<f64>,
        v_coeffs: Vec<f64>,
    },
    /// Bilinear interpolation of tabulated samples.
    Tabulated(TabulatedDensity),
}

/// Density samples on a tensor grid. `values[i][k]` is `rho(r[i], v[k])`;
/// queries outside the table are clamped to its border.
#[derive(Debug, Clone, PartialEq)]
pub struct TabulatedDensity {
    r: Vec<f64>,
    v: Vec<f64>,
    values: Vec<Vec<f64>>,
}

impl TabulatedDensity {
    pub fn new(r: Vec<f64>, v: Vec<f64>, values: Vec<Vec<f64>>) -> Result<Self> {
        let increasing = |xs: &[f64]| xs.len() >= 2 && xs.windows(2).all(|w| w[0] < w[1]);
        if !increasing(&r) || !increasing(&v) {
            return Err(HysteresisError::InvalidDensity(
                "table axes need at least two strictly increasing entries".into(),
            ));
        }
        if values.len() != r.len() || values.iter().any(|row| row.len() != v.len()) {
            return Err(HysteresisError::InvalidDensity(format!(
                "table values must be {}x{}",
                r.len(),
                v.len()
            )));
        }
        Ok(Self { r, v, values })
    }

    fn eval(&self, r: f64, v: f64) -> f64 {
        let (i, a) = locate(&self.r, r);
        let (k, b) = locate(&self.v, v);
        let f00 = self.values[i][k];
        let f01 = self.values[i][k + 1];
        let f10 = self.values[i + 1][k];
        let f11 = self.values[i + 1][k + 1];
        (1.0 - a) * ((1.0 - b) * f00 + b * f01) + a * ((1.0 - b) * f10 + b * f11)
    }

    fn samples(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.r
            .iter()
            .flat_map(move |&r| self.v.iter().map(move |&v| (r, v)))
    }
}

/// Interval index and local coordinate in `[0, 1]`, clamped to the table.
fn locate(axis: &[f64], x: f64) -> (usize, f64) {
    let last = axis.len() - 2;
    let i = match axis.partition_point(|&a| a <= x) {
        0 => 0,
        p => (p - 1).min(last),
    };
    let t = ((x - axis[i]) / (axis[i + 1] - axis[i])).clamp(0.0, 1.0);
    (i, t)
}

fn horner(coeffs: &[f64], x: f64) -> f64 {
    coeffs.iter().rev().fold(0.0, |acc, &c| acc * x + c)
}

/// Preisach density together with its bounds `rho0 <= rho <= rho1` on
/// `(0, Lambda) x (-Lambda, Lambda)` and the output offset `G_bar`.
#[derive(Debug, Clone, PartialEq)]
pub struct PreisachDensity {
    kind: DensityKind,
    rho0: f64,
    rho1: f64,
    gbar: f64,
    lambda: f64,
}

impl PreisachDensity {
    /// Builds a density and checks the bounds on a sample lattice (and on the
    /// table nodes for tabulated densities).
    pub fn new(kind: DensityKind, rho0: f64, rho1: f64, gbar: f64, lambda: f64) -> Result<Self> {
        if !(rho0 > 0.0 && rho0.is_finite()) {
            return Err(HysteresisError::InvalidDensity(format!(
                "rho0 must be positive, got {rho0}"
            )));
        }
        if !(rho1 >= rho0 && rho1.is_finite()) {
            return Err(HysteresisError::InvalidDensity(format!(
                "rho1 must be finite and >= rho0, got {rho1}"
            )));
        }
        if !(lambda > 0.0 && lambda.is_finite()) || !gbar.is_finite() {
            return Err(HysteresisError::InvalidDensity(
                "Lambda must be positive and G_bar finite".into(),
            ));
        }
        let density = Self {
            kind,
            rho0,
            rho1,
            gbar,
            lambda,
        };
        density.check_bounds()?;
        Ok(density)
    }

    /// Constant density with `rho0 = rho1 = value`.
    pub fn uniform(value: f64, gbar: f64, lambda: f64) -> Result<Self> {
        Self::new(DensityKind::Uniform { value }, value, value, gbar, lambda)
    }

    fn check_bounds(&self) -> Result<()> {
        const N: usize = 64;
        let lattice = (0..N).flat_map(|i| {
            let r = (i as f64 + 0.5) * self.lambda / N as f64;
            (0..=N).map(move |k| (r, -self.lambda + 2.0 * self.lambda * k as f64 / N as f64))
        });
        let table: Vec<(f64, f64)> = match &self.kind {
            DensityKind::Tabulated(t) => t
                .samples()
                .filter(|&(r, v)| r > 0.0 && r < self.lambda && v.abs() < self.lambda)
                .collect(),
            _ => Vec::new(),
        };
        let slack = 1e-12 * self.rho1;
        for (r, v) in lattice.chain(table) {
            let rho = self.rho(r, v);
            if !(rho.is_finite()
                && rho > 0.0
                && rho >= self.rho0 - slack
                && rho <= self.rho1 + slack)
            {
                return Err(HysteresisError::InvalidDensity(format!(
                    "rho({r}, {v}) = {rho} outside [{}, {}]",
                    self.rho0, self.rho1
                )));
            }
        }
        Ok(())
    }

    pub fn kind(&self) -> &DensityKind {
        &self.kind
    }

    pub fn rho0(&self) -> f64 {
        self.rho0
    }

    pub fn rho1(&self) -> f64 {
        self.rho1
    }

    pub fn gbar(&self) -> f64 {
        self.gbar
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    /// True when `rho` does not depend on `v` (Prandtl-Ishlinskii case).
    pub fn is_prandtl_ishlinskii(&self) -> bool {
        match &self.kind {
            DensityKind::Uniform { .. } => true,
            DensityKind::Separable { v_coeffs, .. } => v_coeffs.iter().skip(1).all(|&c| c == 0.0),
            DensityKind::Tabulated(_) => false,
        }
    }

    pub fn rho(&self, r: f64, v: f64) -> f64 {
        match &self.kind {
            DensityKind::Uniform { value } => *value,
            DensityKind::Separable { r_coeffs, v_coeffs } => {
                horner(r_coeffs, r) * horner(v_coeffs, v)
            }
            DensityKind::Tabulated(t) => t.eval(r, v),
        }
    }

    fn check_domain(&self, xi: f64) -> Result<()> {
        if xi.abs() > self.lambda * (1.0 + 1e-12) || !xi.is_finite() {
            return Err(HysteresisError::Domain {
                xi,
                lambda: self.lambda,
            });
        }
        Ok(())
    }

    /// `psi(r, xi) = int_0^xi rho(r, v) dv`.
    pub fn psi(&self, r: f64, xi: f64) -> Result<f64> {
        self.check_domain(xi)?;
        Ok(self.psi_raw(r, xi))
    }

    /// `Psi(r, xi) = int_0^xi psi(r, v) dv`.
    pub fn psi_primitive(&self, r: f64, xi: f64) -> Result<f64> {
        self.check_domain(xi)?;
        Ok(self.psi_primitive_raw(r, xi))
    }

    #[inline]
    pub(crate) fn psi_raw(&self, r: f64, xi: f64) -> f64 {
        match &self.kind {
            DensityKind::Uniform { value } => value * xi,
            DensityKind::Separable { r_coeffs, v_coeffs } => {
                // sum b_k xi^{k+1} / (k+1)
                let mut acc = 0.0;
                let mut pow = xi;
                for (k, b) in v_coeffs.iter().enumerate() {
                    acc += b * pow / (k + 1) as f64;
                    pow *= xi;
                }
                horner(r_coeffs, r) * acc
            }
            DensityKind::Tabulated(t) => simpson(xi, |v| t.eval(r, v)),
        }
    }

    pub(crate) fn psi_primitive_raw(&self, r: f64, xi: f64) -> f64 {
        match &self.kind {
            DensityKind::Uniform { value } => 0.5 * value * xi * xi,
            DensityKind::Separable { r_coeffs, v_coeffs } => {
                let mut acc = 0.0;
                let mut pow = xi * xi;
                for (k, b) in v_coeffs.iter().enumerate() {
                    acc += b * pow / ((k + 1) * (k + 2)) as f64;
                    pow *= xi;
                }
                horner(r_coeffs, r) * acc
            }
            // Psi(xi) = int_0^xi (xi - v) rho(v) dv
            DensityKind::Tabulated(t) => simpson(xi, |v| (xi - v) * t.eval(r, v)),
        }
    }

    /// `psi(xi) xi - Psi(xi) = int_0^xi v rho(r, v) dv`, the stored energy
    /// density of one play.
    #[inline]
    pub(crate) fn energy_raw(&self, r: f64, xi: f64) -> f64 {
        match &self.kind {
            DensityKind::Uniform { value } => 0.5 * value * xi * xi,
            DensityKind::Separable { r_coeffs, v_coeffs } => {
                let mut acc = 0.0;
                let mut pow = xi * xi;
                for (k, b) in v_coeffs.iter().enumerate() {
                    acc += b * pow / (k + 2) as f64;
                    pow *= xi;
                }
                horner(r_coeffs, r) * acc
            }
            DensityKind::Tabulated(t) => simpson(xi, |v| v * t.eval(r, v)),
        }
    }
}

/// Composite Simpson rule for `int_0^x f`.
fn simpson(x: f64, f: impl Fn(f64) -> f64) -> f64 {
    if x == 0.0 {
        return 0.0;
    }
    let h = x / SIMPSON_PANELS as f64;
    let mut acc = f(0.0) + f(x);
    for i in 1..SIMPSON_PANELS {
        let w = if i % 2 == 1 { 4.0 } else { 2.0 };
        acc += w * f(i as f64 * h);
    }
    acc * h / 3.0
}
