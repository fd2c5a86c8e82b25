use super::{Result, SpatialError};

/// Uniform Cartesian grid of `nx` (times `ny`) cells on `(0, lx)` (times `(0, ly)`).
/// Cell `(i, j)` has flat index `i + nx * j`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grid {
    dim: usize,
    nx: usize,
    ny: usize,
    lx: f64,
    ly: f64,
}

impl Grid {
    pub fn line(nx: usize, lx: f64) -> Result<Self> {
        Self::build(1, nx, 1, lx, 1.0)
    }

    pub fn rect(nx: usize, ny: usize, lx: f64, ly: f64) -> Result<Self> {
        Self::build(2, nx, ny, lx, ly)
    }

    fn build(dim: usize, nx: usize, ny: usize, lx: f64, ly: f64) -> Result<Self> {
        if nx < 3 || (dim == 2 && ny < 3) {
            return Err(SpatialError::InvalidGrid(format!(
                "need at least 3 cells per direction, got {nx}x{ny}"
            )));
        }
        if !(lx > 0.0 && lx.is_finite() && ly > 0.0 && ly.is_finite()) {
            return Err(SpatialError::InvalidGrid(format!(
                "domain lengths must be positive, got {lx} x {ly}"
            )));
        }
        Ok(Self {
            dim,
            nx,
            ny,
            lx,
            ly,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn nx(&self) -> usize {
        self.nx
    }

    pub fn ny(&self) -> usize {
        self.ny
    }

    pub fn lx(&self) -> f64 {
        self.lx
    }

    pub fn ly(&self) -> f64 {
        self.ly
    }

    pub fn hx(&self) -> f64 {
        self.lx / self.nx as f64
    }

    pub fn hy(&self) -> f64 {
        self.ly / self.ny as f64
    }

    pub fn len(&self) -> usize {
        self.nx * self.ny
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn cell_measure(&self) -> f64 {
        match self.dim {
            1 => self.hx(),
            _ => self.hx() * self.hy(),
        }
    }

    /// `|Omega|`
    pub fn measure(&self) -> f64 {
        match self.dim {
            1 => self.lx,
            _ => self.lx * self.ly,
        }
    }

    /// Cell centre; the second coordinate is zero in 1D.
    pub fn center(&self, idx: usize) -> (f64, f64) {
        let (i, j) = (idx % self.nx, idx / self.nx);
        let x = (i as f64 + 0.5) * self.hx();
        let y = if self.dim == 1 {
            0.0
        } else {
            (j as f64 + 0.5) * self.hy()
        };
        (x, y)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScalarField {
    grid: Grid,
    values: Vec<f64>,
}

impl ScalarField {
    pub fn zeros(grid: Grid) -> Self {
        Self::constant(grid, 0.0)
    }

    pub fn constant(grid: Grid, c: f64) -> Self {
        Self {
            grid,
            values: vec![c; grid.len()],
        }
    }

    pub fn from_values(grid: Grid, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(SpatialError::FieldLength {
                expected: grid.len(),
                got: values.len(),
            });
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(SpatialError::NonFinite(i));
        }
        Ok(Self { grid, values })
    }

    pub fn from_fn(grid: Grid, f: impl Fn(f64, f64) -> f64) -> Self {
        let values = (0..grid.len())
            .map(|i| {
                let (x, y) = grid.center(i);
                f(x, y)
            })
            .collect();
        Self { grid, values }
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn mean(&self) -> f64 {
        integrate(self) / self.grid.measure()
    }

    /// Spatial standard deviation with respect to the cell measure.
    pub fn std_dev(&self) -> f64 {
        let m = self.mean();
        let var = self.values.iter().map(|v| (v - m) * (v - m)).sum::<f64>()
            * self.grid.cell_measure()
            / self.grid.measure();
        var.sqrt()
    }

    pub(crate) fn check_same_grid(&self, other: &ScalarField) -> Result<()> {
        if self.grid != other.grid {
            return Err(SpatialError::GridMismatch);
        }
        Ok(())
    }
}

/// 3-point (1D) or 5-point (2D) Neumann Laplacian into `out`.
pub(crate) fn apply_laplacian(grid: &Grid, f: &[f64], out: &mut [f64]) {
    let nx = grid.nx;
    let ihx2 = 1.0 / (grid.hx() * grid.hx());
    if grid.dim == 1 {
        for i in 0..nx {
            let left = if i == 0 { f[i] } else { f[i - 1] };
            let right = if i + 1 == nx { f[i] } else { f[i + 1] };
            out[i] = (left - 2.0 * f[i] + right) * ihx2;
        }
        return;
    }
    let ny = grid.ny;
    let ihy2 = 1.0 / (grid.hy() * grid.hy());
    for j in 0..ny {
        for i in 0..nx {
            let k = i + nx * j;
            let c = f[k];
            let west = if i == 0 { c } else { f[k - 1] };
            let east = if i + 1 == nx { c } else { f[k + 1] };
            let south = if j == 0 { c } else { f[k - nx] };
            let north = if j + 1 == ny { c } else { f[k + nx] };
            out[k] = (west - 2.0 * c + east) * ihx2 + (south - 2.0 * c + north) * ihy2;
        }
    }
}

pub fn laplacian(f: &ScalarField) -> ScalarField {
    let mut out = vec![0.0; f.values.len()];
    apply_laplacian(&f.grid, &f.values, &mut out);
    ScalarField {
        grid: f.grid,
        values: out,
    }
}

pub fn integrate(f: &ScalarField) -> f64 {
    f.values.iter().sum::<f64>() * f.grid.cell_measure()
}

/// `int f g dx` with the cell-measure weight.
pub fn inner(f: &ScalarField, g: &ScalarField) -> Result<f64> {
    f.check_same_grid(g)?;
    Ok(f.values
        .iter()
        .zip(&g.values)
        .map(|(a, b)| a * b)
        .sum::<f64>()
        * f.grid.cell_measure())
}

/// `V = 1/2 sum over interior faces of (jump / h)^2 * face measure`.
pub fn gradient_energy(f: &ScalarField) -> f64 {
    let g = &f.grid;
    let v = &f.values;
    let nx = g.nx;
    let hx = g.hx();
    if g.dim == 1 {
        let sum: f64 = v.windows(2).map(|w| (w[1] - w[0]) * (w[1] - w[0])).sum();
        return 0.5 * sum / hx;
    }
    let hy = g.hy();
    let mut sx = 0.0;
    let mut sy = 0.0;
    for j in 0..g.ny {
        for i in 0..nx {
            let k = i + nx * j;
            if i + 1 < nx {
                let d = v[k + 1] - v[k];
                sx += d * d;
            }
            if j + 1 < g.ny {
                let d = v[k + nx] - v[k];
                sy += d * d;
            }
        }
    }
    0.5 * (sx * hy / hx + sy * hx / hy)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use std::f64::consts::PI;

    #[test]
    fn constants_are_harmonic() {
        let g = Grid::rect(5, 4, 1.0, 2.0).unwrap();
        let lap = laplacian(&ScalarField::constant(g, 3.7));
        assert!(lap.values().iter().all(|&x| x == 0.0));
        assert_eq!(gradient_energy(&ScalarField::constant(g, 3.7)), 0.0);
    }

    #[test]
    fn cosine_is_an_eigenvector() {
        let g = Grid::line(128, 1.0).unwrap();
        let f = ScalarField::from_fn(g, |x, _| (PI * x).cos());
        let lap = laplacian(&f);
        for (a, b) in lap.values().iter().zip(f.values()) {
            if b.abs() > 1e-3 {
                let rel = (a / b + PI * PI).abs() / (PI * PI);
                assert!(rel <= 0.02);
            }
        }
    }

    #[test]
    fn integrals() {
        let g = Grid::line(128, 1.0).unwrap();
        assert_abs_diff_eq!(
            integrate(&ScalarField::constant(g, 1.0)),
            1.0,
            epsilon = 1e-15
        );
        let f = ScalarField::from_fn(g, |x, _| (PI * x).cos());
        assert_abs_diff_eq!(integrate(&f), 0.0, epsilon = 1e-12);
        let v = gradient_energy(&f);
        assert!((v - PI * PI / 4.0).abs() <= 0.02 * PI * PI / 4.0);
    }

    #[test]
    fn rejects_small_grids_and_bad_fields() {
        assert!(Grid::line(2, 1.0).is_err());
        assert!(Grid::rect(4, 2, 1.0, 1.0).is_err());
        assert!(Grid::line(4, -1.0).is_err());
        let g = Grid::line(4, 1.0).unwrap();
        assert!(ScalarField::from_values(g, vec![0.0; 3]).is_err());
        assert!(ScalarField::from_values(g, vec![0.0, f64::NAN, 0.0, 0.0]).is_err());
    }
}
