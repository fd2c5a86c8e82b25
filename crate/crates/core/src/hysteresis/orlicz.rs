//! Dimension-dependent functions of the convexity estimate.
//!
//! `f'` is the derivative of the odd test function, `F` its second primitive
//! (`F' = f`), `Phi(v) = int_0^v s f'(s) ds`, `Q` generates the Orlicz budget
//! of the time derivative and `M` is its Hoelder companion. With
//! `p = 1 + 2/N` they satisfy `|v| Phi(v) = tau^p Q(|v|/tau)` and
//! `(v^2 f'(v))^{p'} = tau^p M(|v|/tau)`.

use super::{HysteresisError, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OrliczFunctions {
    dimension: usize,
    tau: f64,
    p: f64,
}

pub fn orlicz_functions(dimension: usize, tau: f64) -> Result<OrliczFunctions> {
    if !(1..=3).contains(&dimension) {
        return Err(HysteresisError::UnsupportedDimension(dimension));
    }
    if !(tau > 0.0 && tau.is_finite()) {
        return Err(HysteresisError::InvalidTimeStep(tau));
    }
    Ok(OrliczFunctions {
        dimension,
        tau,
        p: 1.0 + 2.0 / dimension as f64,
    })
}

impl OrliczFunctions {
    pub fn dimension(&self) -> usize {
        self.dimension
    }

    pub fn exponent(&self) -> f64 {
        self.p
    }

    /// Conjugate exponent `p / (p - 1)`.
    pub fn conjugate_exponent(&self) -> f64 {
        self.p / (self.p - 1.0)
    }

    pub fn f_prime(&self, v: f64) -> f64 {
        let a = self.tau + v.abs();
        match self.dimension {
            1 => 1.0,
            2 => 1.0 / a,
            _ => a.powf(self.p - 3.0),
        }
    }

    /// `F(v) = int_0^v f`, even in `v`.
    pub fn big_f(&self, v: f64) -> f64 {
        let tau = self.tau;
        let z = v.abs() / tau;
        match self.dimension {
            1 => 0.5 * v * v,
            2 => tau * ((1.0 + z) * z.ln_1p() - z),
            _ => {
                let p = self.p;
                tau.powf(p - 1.0) / (2.0 - p) * (z - ((1.0 + z).powf(p - 1.0) - 1.0) / (p - 1.0))
            }
        }
    }

    pub fn phi(&self, v: f64) -> f64 {
        let tau = self.tau;
        let a = v.abs();
        match self.dimension {
            1 => 0.5 * v * v,
            2 => a - tau * (a / tau).ln_1p(),
            _ => {
                let p = self.p;
                ((tau + a).powf(p - 1.0) - tau.powf(p - 1.0)) / (p - 1.0)
                    - tau / (2.0 - p) * (tau.powf(p - 2.0) - (tau + a).powf(p - 2.0))
            }
        }
    }

    pub fn q(&self, z: f64) -> f64 {
        let z = z.abs();
        match self.dimension {
            1 => 0.5 * z * z * z,
            2 => z * z - z * z.ln_1p(),
            _ => {
                let p = self.p;
                if z < 1e-3 {
                    // series of z * int_0^z s (1+s)^{p-3} ds, avoids cancellation
                    let c1 = p - 3.0;
                    let c2 = 0.5 * (p - 3.0) * (p - 4.0);
                    let c3 = (p - 3.0) * (p - 4.0) * (p - 5.0) / 6.0;
                    return z
                        * z
                        * z
                        * (0.5 + c1 * z / 3.0 + c2 * z * z / 4.0 + c3 * z * z * z / 5.0);
                }
                z / (p - 1.0) * ((1.0 + z).powf(p - 1.0) - 1.0)
                    - z / (2.0 - p) * (1.0 - (1.0 + z).powf(p - 2.0))
            }
        }
    }

    pub fn m(&self, z: f64) -> f64 {
        let z = z.abs();
        match self.dimension {
            1 => z * z * z,
            2 => z.powi(4) / ((1.0 + z) * (1.0 + z)),
            _ => {
                let p = self.p;
                z.powf(2.0 * p / (p - 1.0)) * (1.0 + z).powf(p * (p - 3.0) / (p - 1.0))
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn reference_values() {
        assert_eq!(orlicz_functions(1, 0.1).unwrap().q(2.0), 4.0);
        let q1 = orlicz_functions(2, 0.1).unwrap().q(1.0);
        assert_relative_eq!(q1, 1.0 - 2f64.ln(), epsilon = 1e-15);
        assert_relative_eq!(q1, 0.306853, epsilon = 1e-6);
    }

    #[test]
    fn unsupported_dimension() {
        assert_eq!(
            orlicz_functions(4, 0.1),
            Err(HysteresisError::UnsupportedDimension(4))
        );
        assert!(orlicz_functions(2, 0.0).is_err());
    }

    #[test]
    fn gamma_and_hoelder_identities() {
        for n in 1..=3 {
            let tau = 0.013;
            let o = orlicz_functions(n, tau).unwrap();
            let p = o.exponent();
            for &v in &[-0.7f64, -1e-3, 2e-4, 0.05, 3.0] {
                let z = v.abs() / tau;
                assert_relative_eq!(
                    v.abs() * o.phi(v),
                    tau.powf(p) * o.q(z),
                    max_relative = 1e-9
                );
                assert_relative_eq!(
                    (v * v * o.f_prime(v)).powf(o.conjugate_exponent()),
                    tau.powf(p) * o.m(z),
                    max_relative = 1e-9
                );
            }
        }
    }

    #[test]
    fn primitives_match_quadrature() {
        // F'' = f' and Phi' = v f', checked by central differences
        for n in 1..=3 {
            let o = orlicz_functions(n, 0.02).unwrap();
            for &v in &[0.01f64, 0.3, 1.7] {
                let h = 1e-4 * v;
                let f2 = (o.big_f(v + h) - 2.0 * o.big_f(v) + o.big_f(v - h)) / (h * h);
                assert_relative_eq!(f2, o.f_prime(v), max_relative = 1e-4);
                let dphi = (o.phi(v + h) - o.phi(v - h)) / (2.0 * h);
                assert_relative_eq!(dphi, v * o.f_prime(v), max_relative = 1e-6);
            }
        }
    }
}
