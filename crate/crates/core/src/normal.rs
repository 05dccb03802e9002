//! Standard normal density and distribution function.
//!
//! `Phi` is evaluated through `erfc` so that the far lower tail keeps full
//! relative precision; the overshoot series sum terms like `Phi(-c sqrt(n))`
//! long after `1 - Phi` would have cancelled to zero.

use std::f64::consts::{FRAC_1_SQRT_2, PI};

/// Standard normal density.
pub fn pdf(x: f64) -> f64 {
    (-0.5 * x * x).exp() / (2.0 * PI).sqrt()
}

/// Standard normal distribution function.
pub fn cdf(x: f64) -> f64 {
    0.5 * libm::erfc(-x * FRAC_1_SQRT_2)
}
