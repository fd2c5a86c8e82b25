use super::{HysteresisError, Result};

const BOUND_SAMPLES: usize = 2048;

#[derive(Debug, Clone, PartialEq)]
pub enum MapKind {
    Identity,
    /// `g(u) = (u + a u^3 / Lambda^2) / (1 + a)`, `a >= 0`; fixes `0` and `+-Lambda`.
    CubicOdd {
        a: f64,
    },
    /// Monotone piecewise-cubic Hermite interpolant (Fritsch-Carlson slopes).
    TabulatedMonotone {
        u: Vec<f64>,
        g: Vec<f64>,
        slopes: Vec<f64>,
    },
}

/// Smooth increasing change of input variable `w = g(u)` with the bounds
/// `g_* <= g' <= g^*`, `|g''| <= g_bar` on `[-Lambda, Lambda]`.
#[derive(Debug, Clone, PartialEq)]
pub struct ConvexifiableMap {
    kind: MapKind,
    lambda: f64,
    lower_slope: f64,
    upper_slope: f64,
    curvature: f64,
}

impl ConvexifiableMap {
    pub fn identity(lambda: f64) -> Self {
        Self {
            kind: MapKind::Identity,
            lambda,
            lower_slope: 1.0,
            upper_slope: 1.0,
            curvature: 0.0,
        }
    }

    pub fn cubic_odd(a: f64, lambda: f64) -> Result<Self> {
        if !(a >= 0.0 && a.is_finite()) {
            return Err(HysteresisError::InvalidMap(format!(
                "cubic coefficient must be >= 0, got {a}"
            )));
        }
        let map = Self {
            kind: MapKind::CubicOdd { a },
            lambda,
            lower_slope: 1.0 / (1.0 + a),
            upper_slope: (1.0 + 3.0 * a) / (1.0 + a),
            curvature: 6.0 * a / (lambda * (1.0 + a)),
        };
        map.check()?;
        Ok(map)
    }

    pub fn tabulated(u: Vec<f64>, g: Vec<f64>, lambda: f64) -> Result<Self> {
        if u.len() != g.len() || u.len() < 2 {
            return Err(HysteresisError::InvalidMap(
                "table needs matching u and g columns with at least two rows".into(),
            ));
        }
        if !u.windows(2).all(|w| w[0] < w[1]) || !g.windows(2).all(|w| w[0] < w[1]) {
            return Err(HysteresisError::InvalidMap(
                "table must be strictly increasing in u and g".into(),
            ));
        }
        if u[0] > -lambda || u[u.len() - 1] < lambda {
            return Err(HysteresisError::InvalidMap(format!(
                "table must cover [-{lambda}, {lambda}]"
            )));
        }
        let slopes = fritsch_carlson(&u, &g);
        let mut map = Self {
            kind: MapKind::TabulatedMonotone { u, g, slopes },
            lambda,
            lower_slope: 0.0,
            upper_slope: 0.0,
            curvature: 0.0,
        };
        let (lo, hi, curv) = map.sampled_bounds();
        map.lower_slope = lo;
        map.upper_slope = hi;
        map.curvature = curv;
        map.check()?;
        Ok(map)
    }

    pub fn kind(&self) -> &MapKind {
        &self.kind
    }

    /// `g_*`
    pub fn lower_slope(&self) -> f64 {
        self.lower_slope
    }

    /// `g^*`
    pub fn upper_slope(&self) -> f64 {
        self.upper_slope
    }

    /// `g_bar`
    pub fn curvature_bound(&self) -> f64 {
        self.curvature
    }

    #[inline]
    pub fn eval(&self, u: f64) -> f64 {
        match &self.kind {
            MapKind::Identity => u,
            MapKind::CubicOdd { a } => {
                (u + a * u * u * u / (self.lambda * self.lambda)) / (1.0 + a)
            }
            MapKind::TabulatedMonotone { u: us, g, slopes } => hermite(us, g, slopes, u).0,
        }
    }

    #[inline]
    pub fn derivative(&self, u: f64) -> f64 {
        match &self.kind {
            MapKind::Identity => 1.0,
            MapKind::CubicOdd { a } => {
                (1.0 + 3.0 * a * u * u / (self.lambda * self.lambda)) / (1.0 + a)
            }
            MapKind::TabulatedMonotone { u: us, g, slopes } => hermite(us, g, slopes, u).1,
        }
    }

    /// Extremes of `g'` and of the finite-difference second derivative over
    /// `[-Lambda, Lambda]`.
    pub fn sampled_bounds(&self) -> (f64, f64, f64) {
        let h = 2.0 * self.lambda / BOUND_SAMPLES as f64;
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        let mut curv: f64 = 0.0;
        let mut prev = self.derivative(-self.lambda);
        for i in 0..=BOUND_SAMPLES {
            let d = self.derivative(-self.lambda + i as f64 * h);
            lo = lo.min(d);
            hi = hi.max(d);
            if i > 0 {
                curv = curv.max((d - prev).abs() / h);
            }
            prev = d;
        }
        (lo, hi, curv)
    }

    /// Checks `g(0) = 0`, `g([-Lambda, Lambda]) within [-Lambda, Lambda]` and
    /// the declared derivative bounds against sampling.
    pub fn check(&self) -> Result<()> {
        let scale = self.lambda.max(1.0);
        if self.eval(0.0).abs() > 1e-12 * scale {
            return Err(HysteresisError::InvalidMap(format!(
                "g(0) = {} must vanish",
                self.eval(0.0)
            )));
        }
        for end in [-self.lambda, self.lambda] {
            if self.eval(end).abs() > self.lambda * (1.0 + 1e-12) {
                return Err(HysteresisError::InvalidMap(format!(
                    "g({end}) = {} leaves [-Lambda, Lambda]",
                    self.eval(end)
                )));
            }
        }
        let (lo, hi, curv) = self.sampled_bounds();
        let tol = 1e-9 * self.upper_slope.max(1.0);
        if !(self.lower_slope > 0.0)
            || lo < self.lower_slope - tol
            || hi > self.upper_slope + tol
            || curv > self.curvature * (1.0 + 1e-6) + 1e-9
        {
            return Err(HysteresisError::InvalidMap(format!(
                "sampled g' in [{lo}, {hi}], |g''| <= {curv} violates declared bounds \
                 [{}, {}], {}",
                self.lower_slope, self.upper_slope, self.curvature
            )));
        }
        Ok(())
    }
}

fn fritsch_carlson(x: &[f64], y: &[f64]) -> Vec<f64> {
    let n = x.len();
    let secant: Vec<f64> = (0..n - 1)
        .map(|i| (y[i + 1] - y[i]) / (x[i + 1] - x[i]))
        .collect();
    let mut m = vec![0.0; n];
    m[0] = secant[0];
    m[n - 1] = secant[n - 2];
    for i in 1..n - 1 {
        m[i] = 0.5 * (secant[i - 1] + secant[i]);
    }
    for i in 0..n - 1 {
        let a = m[i] / secant[i];
        let b = m[i + 1] / secant[i];
        let s = a * a + b * b;
        if s > 9.0 {
            let t = 3.0 / s.sqrt();
            m[i] = t * a * secant[i];
            m[i + 1] = t * b * secant[i];
        }
    }
    m
}

/// Value and derivative of the cubic Hermite interpolant, linear beyond the ends.
fn hermite(x: &[f64], y: &[f64], m: &[f64], t: f64) -> (f64, f64) {
    let n = x.len();
    if t <= x[0] {
        return (y[0] + m[0] * (t - x[0]), m[0]);
    }
    if t >= x[n - 1] {
        return (y[n - 1] + m[n - 1] * (t - x[n - 1]), m[n - 1]);
    }
    let i = (x.partition_point(|&a| a <= t) - 1).min(n - 2);
    let h = x[i + 1] - x[i];
    let s = (t - x[i]) / h;
    let h00 = (1.0 + 2.0 * s) * (1.0 - s) * (1.0 - s);
    let h10 = s * (1.0 - s) * (1.0 - s);
    let h01 = s * s * (3.0 - 2.0 * s);
    let h11 = s * s * (s - 1.0);
    let value = h00 * y[i] + h10 * h * m[i] + h01 * y[i + 1] + h11 * h * m[i + 1];
    let d00 = 6.0 * s * s - 6.0 * s;
    let d10 = 3.0 * s * s - 4.0 * s + 1.0;
    let d01 = -d00;
    let d11 = 3.0 * s * s - 2.0 * s;
    let deriv = (d00 * y[i] + d01 * y[i + 1]) / h + d10 * m[i] + d11 * m[i + 1];
    (value, deriv)
}
