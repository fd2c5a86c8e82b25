use super::{HysteresisError, Result};

/// Uniform midpoint grid on the threshold axis `(0, Lambda)`.
///
/// Node `j` (zero based) sits at `(j + 1/2) * Lambda / R` and carries the
/// quadrature weight `Lambda / R`. Plays with thresholds `r >= Lambda` are
/// identically zero and are not stored.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ThresholdGrid {
    lambda: f64,
    count: usize,
}

impl ThresholdGrid {
    pub fn new(lambda: f64, count: usize) -> Result<Self> {
        if !(lambda.is_finite() && lambda > 0.0) {
            return Err(HysteresisError::InvalidGrid(format!(
                "Lambda must be positive and finite, got {lambda}"
            )));
        }
        if count < 2 {
            return Err(HysteresisError::InvalidGrid(format!(
                "need at least 2 threshold nodes, got {count}"
            )));
        }
        Ok(Self { lambda, count })
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn len(&self) -> usize {
        self.count
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Node spacing, which is also the midpoint quadrature weight.
    pub fn spacing(&self) -> f64 {
        self.lambda / self.count as f64
    }

    pub fn node(&self, j: usize) -> f64 {
        (j as f64 + 0.5) * self.spacing()
    }

    pub fn nodes(&self) -> impl ExactSizeIterator<Item = f64> + '_ {
        let dr = self.spacing();
        (0..self.count).map(move |j| (j as f64 + 0.5) * dr)
    }

    /// `(Lambda - r_j)^+`, the cone bound on the play at node `j`.
    pub fn cone(&self, j: usize) -> f64 {
        (self.lambda - self.node(j)).max(0.0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn nodes_are_midpoints() {
        let g = ThresholdGrid::new(2.0, 4).unwrap();
        let nodes: Vec<f64> = g.nodes().collect();
        assert_eq!(nodes, vec![0.25, 0.75, 1.25, 1.75]);
        assert_eq!(g.spacing(), 0.5);
        assert!(nodes.windows(2).all(|w| w[0] < w[1]));
        assert!(nodes[3] < g.lambda());
    }

    #[test]
    fn rejects_degenerate_grids() {
        assert!(ThresholdGrid::new(1.0, 1).is_err());
        assert!(ThresholdGrid::new(0.0, 8).is_err());
        assert!(ThresholdGrid::new(f64::NAN, 8).is_err());
    }
}
