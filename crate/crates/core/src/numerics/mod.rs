//! Numerical building blocks shared by every other module.

mod normal;
mod quadrature;
mod rng;
mod vector;

pub use normal::{
    mean_abs_std_normal, std_normal_ccdf, std_normal_cdf, std_normal_pdf, truncated_normal_lower_moment,
    truncated_normal_upper_moment, INV_SQRT_2PI,
};
pub use quadrature::{gauss_hermite_expectation, NormalQuadrature, QuadratureRule, DEFAULT_HERMITE_ORDER, MAX_HERMITE_ORDER};
pub use rng::{Rng, RngState};
pub use vector::{axpy, dot, Vector};
pub(crate) use vector::check_dims;

use crate::error::{invalid, Result};

/// `mean + sigma·z` with `z` i.i.d. standard normal, consuming
/// `2·ceil(d/2)` uniform draws from `rng`.
pub fn sample_gaussian_vector(rng: &mut Rng, mean: &Vector, sigma: f64, d: usize) -> Result<Vector> {
    check_dims(d, mean.dim())?;
    if !(sigma >= 0.0) || !sigma.is_finite() {
        return Err(invalid("sigma", "must be finite and non-negative"));
    }
    let mut out = vec![0.0; d];
    fill_gaussian(rng, mean.as_slice(), sigma, &mut out);
    Ok(Vector::new(out).expect("finite by construction"))
}

/// Slice form of [`sample_gaussian_vector`] used in hot loops.
pub fn fill_gaussian(rng: &mut Rng, mean: &[f64], sigma: f64, out: &mut [f64]) {
    rng.fill_standard_normal(out);
    for (o, m) in out.iter_mut().zip(mean) {
        *o = m + sigma * *o;
    }
}

/// Inverse CDF of Student's t with two degrees of freedom.
pub fn student_t2_from_uniform(u: f64) -> f64 {
    (2.0 * u - 1.0) / (2.0 * u * (1.0 - u)).sqrt()
}

/// One t₂ variate from a single open-interval uniform draw.
pub fn sample_student_t2(rng: &mut Rng) -> f64 {
    student_t2_from_uniform(rng.uniform_open())
}
