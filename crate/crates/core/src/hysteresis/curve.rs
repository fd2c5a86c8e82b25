use super::play::project;
use super::{HysteresisError, Result, ThresholdGrid};

/// Preisach memory at one point: play values sampled on a threshold grid.
#[derive(Debug, Clone, PartialEq)]
pub struct MemoryCurve {
    grid: ThresholdGrid,
    xi: Vec<f64>,
}

impl MemoryCurve {
    /// Demagnetized state, `xi = 0` at every threshold.
    pub fn virgin(grid: ThresholdGrid) -> Self {
        Self {
            grid,
            xi: vec![0.0; grid.len()],
        }
    }

    pub fn from_values(grid: ThresholdGrid, xi: Vec<f64>) -> Result<Self> {
        if xi.len() != grid.len() {
            return Err(HysteresisError::LengthMismatch {
                expected: grid.len(),
                got: xi.len(),
            });
        }
        Ok(Self { grid, xi })
    }

    /// `xi(r) = sign(u0) (|u0| - r)^+`: the virgin curve after a monotone
    /// excursion from zero to `u0`.
    pub fn clamped(grid: ThresholdGrid, u0: f64) -> Self {
        let xi = grid
            .nodes()
            .map(|r| u0.signum() * (u0.abs() - r).max(0.0))
            .collect();
        Self { grid, xi }
    }

    pub fn from_fn(grid: ThresholdGrid, f: impl Fn(f64) -> f64) -> Self {
        Self {
            grid,
            xi: grid.nodes().map(f).collect(),
        }
    }

    pub fn grid(&self) -> &ThresholdGrid {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.xi
    }

    /// Applies the play at every node for the input value `w`.
    pub fn update(&self, w: f64) -> MemoryCurve {
        let mut next = self.clone();
        next.update_in_place(w);
        next
    }

    pub fn update_in_place(&mut self, w: f64) {
        let dr = self.grid.spacing();
        for (j, xi) in self.xi.iter_mut().enumerate() {
            *xi = project(*xi, w, (j as f64 + 0.5) * dr);
        }
    }

    /// Largest excess of `|xi_{j+1} - xi_j|` over the node spacing, or zero.
    pub fn lipschitz_excess(&self) -> f64 {
        let dr = self.grid.spacing();
        self.xi
            .windows(2)
            .map(|w| (w[1] - w[0]).abs() - dr)
            .fold(0.0, f64::max)
    }

    /// Largest excess of `|xi_j|` over `(Lambda - r_j)^+`, or zero.
    pub fn cone_excess(&self) -> f64 {
        self.xi
            .iter()
            .enumerate()
            .map(|(j, x)| x.abs() - self.grid.cone(j))
            .fold(0.0, f64::max)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid() -> ThresholdGrid {
        ThresholdGrid::new(2.0, 16).unwrap()
    }

    #[test]
    fn virgin_stays_put_at_zero_input() {
        let c = MemoryCurve::virgin(grid());
        assert_eq!(c.update(0.0), c);
    }

    #[test]
    fn monotone_load_and_reversal() {
        let g = grid();
        let loaded = MemoryCurve::virgin(g).update(1.0);
        for (j, r) in g.nodes().enumerate() {
            assert!((loaded.values()[j] - (1.0 - r).max(0.0)).abs() < 1e-15);
        }
        let back = loaded.update(0.0);
        for (j, r) in g.nodes().enumerate() {
            let expected = (1.0 - r).max(0.0).min(r);
            assert!((back.values()[j] - expected).abs() < 1e-15);
        }
    }

    #[test]
    fn length_is_checked() {
        assert!(MemoryCurve::from_values(grid(), vec![0.0; 3]).is_err());
    }

    #[test]
    fn excess_measures() {
        let g = ThresholdGrid::new(1.0, 4).unwrap();
        let mut xi = vec![0.0; 4];
        xi[1] = 0.5; // jump of 2 dr
        let c = MemoryCurve::from_values(g, xi).unwrap();
        assert!((c.lipschitz_excess() - 0.25).abs() < 1e-15);
        assert_eq!(MemoryCurve::clamped(g, 1.0).cone_excess(), 0.0);
    }
}
