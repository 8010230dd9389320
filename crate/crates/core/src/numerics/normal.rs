//! Standard normal special functions and truncated-normal moments.
//!
//! `Φ` and `Φᶜ` are both evaluated through `erfc` (the FreeBSD `s_erf.c`
//! algorithm, accurate to about one ulp), so neither is ever formed by
//! subtracting from one and the upper tail stays accurate far past `x = 8`.

use std::f64::consts::{FRAC_1_SQRT_2, PI};

/// `1 / sqrt(2π)`.
pub const INV_SQRT_2PI: f64 = 0.398_942_280_401_432_7;

pub fn std_normal_pdf(x: f64) -> f64 {
    INV_SQRT_2PI * (-0.5 * x * x).exp()
}

/// `Φ(x)`. Saturates to 0 / 1 in the tails.
pub fn std_normal_cdf(x: f64) -> f64 {
    0.5 * libm::erfc(-x * FRAC_1_SQRT_2)
}

/// `Φᶜ(x) = 1 − Φ(x)`, computed without cancellation.
pub fn std_normal_ccdf(x: f64) -> f64 {
    0.5 * libm::erfc(x * FRAC_1_SQRT_2)
}

/// For `X ~ N(mean, sigma²)` returns `(P(X ≤ b), E[X·1{X ≤ b}])`.
///
/// With `z = (b − mean)/sigma` these are `Φ(z)` and `mean·Φ(z) − sigma·φ(z)`.
/// `b = +∞` gives `(1, mean)` and `b = −∞` gives `(0, 0)`.
pub fn truncated_normal_lower_moment(mean: f64, sigma: f64, b: f64) -> (f64, f64) {
    let z = (b - mean) / sigma;
    if z == f64::INFINITY {
        return (1.0, mean);
    }
    if z == f64::NEG_INFINITY {
        return (0.0, 0.0);
    }
    let mass = std_normal_cdf(z);
    (mass, mean * mass - sigma * std_normal_pdf(z))
}

/// Upper counterpart: `(P(X > b), E[X·1{X > b}])`.
pub fn truncated_normal_upper_moment(mean: f64, sigma: f64, b: f64) -> (f64, f64) {
    let z = (b - mean) / sigma;
    if z == f64::INFINITY {
        return (0.0, 0.0);
    }
    if z == f64::NEG_INFINITY {
        return (1.0, mean);
    }
    let mass = std_normal_ccdf(z);
    (mass, mean * mass + sigma * std_normal_pdf(z))
}

/// Expected absolute value of a standard normal, `sqrt(2/π)`.
pub fn mean_abs_std_normal() -> f64 {
    (2.0 / PI).sqrt()
}
