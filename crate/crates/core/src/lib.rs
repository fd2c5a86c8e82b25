//! Finite-difference simulation of unsaturated porous-media flow with
//! Preisach hysteresis in the capillary pressure relation.
//!
//! The state equation is `d/dt G[u] = laplacian(u)` on a rectangle with
//! no-flux boundaries, where `G[u] = Gbar + P[g(u)]` is a Preisach operator
//! composed with a convexifiable input map. Time is discretized by backward
//! Euler and each step is a monotone nonlinear system solved by damped
//! Newton with a relaxation fallback.

// `!(x > 0.0)` is used on purpose so that NaN is rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod hysteresis;
pub mod sim;
pub mod spatial;
pub mod stepper;
