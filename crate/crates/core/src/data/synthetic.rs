use crate::error::{invalid, Result};
use crate::numerics::{check_dims, fill_gaussian, sample_student_t2, Rng, Vector};
use crate::sgd::SampleSource;

use super::LabeledSource;

/// Folded samples `ξ ~ N(μ, σ²I)` drawn directly.
#[derive(Debug, Clone)]
pub struct FoldedGaussianSource {
    mu: Vector,
    sigma: f64,
}

impl FoldedGaussianSource {
    pub fn new(mu: Vector, sigma: f64) -> Self {
        Self { mu, sigma }
    }
}

impl SampleSource for FoldedGaussianSource {
    fn dim(&self) -> usize {
        self.mu.dim()
    }

    fn next_into(&mut self, rng: &mut Rng, out: &mut [f64]) -> bool {
        fill_gaussian(rng, self.mu.as_slice(), self.sigma, out);
        true
    }
}

/// Fair coin for `y`, then `ζ ~ N(μ_y, σ²I)`.
#[derive(Debug, Clone)]
pub struct GaussianMixture {
    mu0: Vector,
    mu1: Vector,
    sigma: f64,
}

impl GaussianMixture {
    pub fn new(mu0: Vector, mu1: Vector, sigma: f64) -> Result<Self> {
        check_dims(mu0.dim(), mu1.dim())?;
        if !(sigma >= 0.0) || !sigma.is_finite() {
            return Err(invalid("sigma", "must be finite and non-negative"));
        }
        Ok(Self { mu0, mu1, sigma })
    }

    pub fn mu0(&self) -> &Vector {
        &self.mu0
    }

    pub fn mu1(&self) -> &Vector {
        &self.mu1
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }
}

impl LabeledSource for GaussianMixture {
    fn dim(&self) -> usize {
        self.mu0.dim()
    }

    fn next_labeled(&mut self, rng: &mut Rng, out: &mut [f64]) -> Option<u8> {
        let y = rng.coin() as u8;
        let mean = if y == 1 { &self.mu1 } else { &self.mu0 };
        fill_gaussian(rng, mean.as_slice(), self.sigma, out);
        Some(y)
    }
}

/// Fair coin for `y`; entries of `ζ` i.i.d. `β·t₂`; class 1 adds 1 to entry 0.
#[derive(Debug, Clone)]
pub struct StudentT2Mixture {
    beta: f64,
    d: usize,
}

impl StudentT2Mixture {
    pub fn new(beta: f64, d: usize) -> Result<Self> {
        if !(beta >= 0.0) || !beta.is_finite() {
            return Err(invalid("beta", "must be finite and non-negative"));
        }
        if d == 0 {
            return Err(invalid("d", "must be at least 1"));
        }
        Ok(Self { beta, d })
    }
}

impl LabeledSource for StudentT2Mixture {
    fn dim(&self) -> usize {
        self.d
    }

    fn next_labeled(&mut self, rng: &mut Rng, out: &mut [f64]) -> Option<u8> {
        let y = rng.coin() as u8;
        for o in out.iter_mut() {
            *o = self.beta * sample_student_t2(rng);
        }
        if y == 1 {
            out[0] += 1.0;
        }
        Some(y)
    }
}
