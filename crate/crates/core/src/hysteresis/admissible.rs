//! Initial memory compatible with the initial pressure.
//!
//! At a point where `Delta u0 != 0` the saturation starts moving immediately,
//! so the plays below some depth `r0 >= sqrt|Delta u0| / L` must already be
//! pinned to the input on the side the motion goes. A virgin memory with
//! `Delta u0 != 0` is a turning point everywhere and admits no solution.

use std::fmt;

use super::{HysteresisError, MemoryCurve, Result, ThresholdGrid};

const SLOPE_TOL: f64 = 1e-8;

fn sign(x: f64) -> f64 {
    if x > 0.0 {
        1.0
    } else if x < 0.0 {
        -1.0
    } else {
        0.0
    }
}

/// Builds the initial memory for the value `u0` and Laplacian `lap_u0`.
///
/// Below `r0 = sqrt|lap_u0| / l_const` the curve is `u0 - sign(lap_u0) r`;
/// above it returns to zero at unit slope and stays there.
pub fn admissible_memory(
    u0: f64,
    lap_u0: f64,
    l_const: f64,
    grid: ThresholdGrid,
) -> Result<MemoryCurve> {
    if !(l_const > 0.0) {
        return Err(HysteresisError::HypothesisViolation(format!(
            "compatibility constant must be positive, got {l_const}"
        )));
    }
    let depth = lap_u0.abs().sqrt() / l_const;
    pinned_memory(u0, sign(lap_u0), depth, grid)
}

/// Memory pinned to `u0` on the `direction` side down to `depth`, then
/// relaxing to zero along the steepest admissible path.
pub fn pinned_memory(
    u0: f64,
    direction: f64,
    depth: f64,
    grid: ThresholdGrid,
) -> Result<MemoryCurve> {
    let lambda = grid.lambda();
    if u0.abs() > lambda {
        return Err(HysteresisError::HypothesisViolation(format!(
            "|u0| = {} exceeds Lambda = {lambda}",
            u0.abs()
        )));
    }
    if depth > lambda {
        return Err(HysteresisError::HypothesisViolation(format!(
            "required memory depth {depth} exceeds Lambda = {lambda}"
        )));
    }
    let direction = sign(direction);
    let peak = u0 - direction * depth;
    if depth + peak.abs() > lambda * (1.0 + 1e-12) {
        return Err(HysteresisError::HypothesisViolation(format!(
            "memory pinned to depth {depth} cannot vanish before Lambda = {lambda} \
             (needs {})",
            depth + peak.abs()
        )));
    }
    Ok(MemoryCurve::from_fn(grid, |r| {
        if r < depth {
            u0 - direction * r
        } else {
            peak.signum() * (peak.abs() - (r - depth)).max(0.0)
        }
    }))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Condition {
    /// `lambda(0) = u0`
    C0,
    /// `sqrt|Delta u0| / L <= r0 <= Lambda`
    C1,
    /// `-d lambda / dr = sign(Delta u0)` below `r0`
    C2,
    Lipschitz,
    LambdaFeasibility,
}

impl fmt::Display for Condition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let name = match self {
            Condition::C0 => "C0",
            Condition::C1 => "C1",
            Condition::C2 => "C2",
            Condition::Lipschitz => "Lipschitz",
            Condition::LambdaFeasibility => "LambdaFeasibility",
        };
        f.write_str(name)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Violation {
    pub cell: usize,
    pub condition: Condition,
    pub magnitude: f64,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "cell {}: {} violated (magnitude {:.3e})",
            self.cell, self.condition, self.magnitude
        )
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct HypothesisReport {
    pub violations: Vec<Violation>,
}

impl HypothesisReport {
    pub fn ok(&self) -> bool {
        self.violations.is_empty()
    }

    pub fn with_cell(mut self, cell: usize) -> Self {
        for v in &mut self.violations {
            v.cell = cell;
        }
        self
    }

    pub fn merge(&mut self, other: HypothesisReport) {
        self.violations.extend(other.violations);
    }

    pub fn has(&self, condition: Condition) -> bool {
        self.violations.iter().any(|v| v.condition == condition)
    }

    pub fn push(&mut self, condition: Condition, magnitude: f64) {
        self.violations.push(Violation {
            cell: 0,
            condition,
            magnitude,
        });
    }
}

impl fmt::Display for HypothesisReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.ok() {
            return f.write_str("initial memory admissible");
        }
        for (i, v) in self.violations.iter().enumerate() {
            if i > 0 {
                writeln!(f)?;
            }
            write!(f, "{v}")?;
        }
        Ok(())
    }
}

/// Checks the initial compatibility conditions for one memory curve and
/// reports every failure. Violations carry cell index 0; see
/// [`HypothesisReport::with_cell`].
pub fn validate_hypothesis(
    curve: &MemoryCurve,
    u0: f64,
    lap_u0: f64,
    l_const: f64,
) -> HypothesisReport {
    let grid = curve.grid();
    let xi = curve.values();
    let dr = grid.spacing();
    let lambda = grid.lambda();
    let mut report = HypothesisReport::default();

    // C0 by linear extrapolation from the first two nodes
    let at_zero = xi[0] - 0.5 * (xi[1] - xi[0]);
    let c0 = (at_zero - u0).abs();
    if c0 > dr * (1.0 + 1e-9) {
        report.push(Condition::C0, c0);
    }

    let depth = lap_u0.abs().sqrt() / l_const;
    if !(l_const > 0.0) || depth > lambda {
        report.push(Condition::C1, depth - lambda);
    }

    let direction = sign(lap_u0);
    if direction != 0.0 {
        let mut worst: f64 = 0.0;
        let (mut r_prev, mut xi_prev) = (0.0, u0);
        for (r, &x) in grid.nodes().zip(xi).take_while(|(r, _)| *r < depth) {
            let slope = (x - xi_prev) / (r - r_prev);
            worst = worst.max((slope + direction).abs());
            r_prev = r;
            xi_prev = x;
        }
        if worst > SLOPE_TOL {
            report.push(Condition::C2, worst);
        }
    }

    let lip = curve.lipschitz_excess();
    if lip > 1e-9 * dr {
        report.push(Condition::Lipschitz, lip);
    }

    let cone = curve.cone_excess().max(u0.abs() - lambda);
    if cone > 1e-12 * lambda {
        report.push(Condition::LambdaFeasibility, cone);
    }
    report
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn zero_laplacian_gives_clamped_curve() {
        let grid = ThresholdGrid::new(1.0, 32).unwrap();
        let c = admissible_memory(0.5, 0.0, 1.0, grid).unwrap();
        for (r, &x) in grid.nodes().zip(c.values()) {
            assert_abs_diff_eq!(x, (0.5 - r).max(0.0), epsilon = 1e-15);
        }
        assert!(validate_hypothesis(&c, 0.5, 0.0, 1.0).ok());
    }

    #[test]
    fn negative_laplacian_climbs_then_returns() {
        let grid = ThresholdGrid::new(3.0, 60).unwrap();
        let c = admissible_memory(0.0, -1.0, 1.0, grid).unwrap();
        for (r, &x) in grid.nodes().zip(c.values()) {
            let expected = if r < 1.0 {
                r
            } else {
                (1.0 - (r - 1.0)).max(0.0)
            };
            assert_abs_diff_eq!(x, expected, epsilon = 1e-15);
        }
        let report = validate_hypothesis(&c, 0.0, -1.0, 1.0);
        assert!(report.ok(), "{report}");
    }

    #[test]
    fn too_deep_memory_is_infeasible() {
        let grid = ThresholdGrid::new(1.0, 16).unwrap();
        assert!(matches!(
            admissible_memory(0.0, 4.0, 1.0, grid),
            Err(HysteresisError::HypothesisViolation(_))
        ));
        // depth fits but the return path does not
        assert!(admissible_memory(0.5, -0.64, 1.0, grid).is_err());
    }

    #[test]
    fn virgin_memory_with_curvature_violates_c2() {
        let grid = ThresholdGrid::new(1.0, 64).unwrap();
        let report = validate_hypothesis(&MemoryCurve::virgin(grid), 0.0, 0.25, 1.0);
        assert!(report.has(Condition::C2));
        assert!(!report.ok());
        let report = report.with_cell(7);
        assert!(report.violations.iter().all(|v| v.cell == 7));
    }

    #[test]
    fn steep_jump_violates_lipschitz() {
        let grid = ThresholdGrid::new(1.0, 8).unwrap();
        let mut xi = vec![0.0; 8];
        xi[4] = 2.0 * grid.spacing();
        let c = MemoryCurve::from_values(grid, xi).unwrap();
        let report = validate_hypothesis(&c, 0.0, 0.0, 1.0);
        assert!(report.has(Condition::Lipschitz));
    }
}
