use super::{HysteresisError, Result};

/// Time-discrete play with threshold `r`: the projection of `xi_prev` onto
/// the band `[u - r, u + r]`.
///
/// This is the unique solution of `|u - xi| <= r`,
/// `(xi - xi_prev)(u - xi - z) >= 0` for all `|z| <= r`.
pub fn play_update(xi_prev: f64, u: f64, r: f64) -> Result<f64> {
    if !(r > 0.0) {
        return Err(HysteresisError::InvalidThreshold(r));
    }
    Ok(project(xi_prev, u, r))
}

#[inline]
pub(crate) fn project(xi_prev: f64, u: f64, r: f64) -> f64 {
    xi_prev.min(u + r).max(u - r)
}
