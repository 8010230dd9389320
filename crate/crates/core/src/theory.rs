//! Exact quantities under the folded Gaussian model `ξ ~ N(μ, σ²I_d)`.

use serde::{Deserialize, Serialize};

use crate::data::FoldedGaussianSource;
use crate::error::{invalid, Error, Result};
use crate::losses::{ray_derivative, LossKind};
use crate::numerics::{
    check_dims, dot, std_normal_ccdf, std_normal_cdf, NormalQuadrature, Vector, INV_SQRT_2PI,
};

/// Folded data model: `ξ ~ N(mu, sigma²·I_d)` with `d = mu.dim()`.
///
/// `sigma = 0` is admitted so that noiseless paths can be simulated;
/// quantities that need `sigma > 0` (the minimiser, high-regime sets)
/// reject it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GaussianFoldedModel {
    mu: Vector,
    sigma: f64,
}

impl GaussianFoldedModel {
    pub fn new(mu: Vector, sigma: f64) -> Result<Self> {
        if mu.is_zero() {
            return Err(invalid("mu", "must be nonzero"));
        }
        if !(sigma >= 0.0) || !sigma.is_finite() {
            return Err(invalid("sigma", "must be finite and non-negative"));
        }
        Ok(Self { mu, sigma })
    }

    /// `mu = mu_norm·e₁` in dimension `d`.
    pub fn axis_aligned(d: usize, mu_norm: f64, sigma: f64) -> Result<Self> {
        if d == 0 {
            return Err(invalid("d", "must be at least 1"));
        }
        Self::new(Vector::basis(d, 0).scaled(mu_norm), sigma)
    }

    pub fn mu(&self) -> &Vector {
        &self.mu
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    pub fn dim(&self) -> usize {
        self.mu.dim()
    }

    pub fn mu_norm(&self) -> f64 {
        self.mu.norm()
    }

    pub fn source(&self) -> FoldedGaussianSource {
        FoldedGaussianSource::new(self.mu.clone(), self.sigma)
    }

    fn require_noise(&self) -> Result<()> {
        if self.sigma > 0.0 {
            Ok(())
        } else {
            Err(invalid("sigma", "must be positive for this quantity"))
        }
    }

    /// `P(ξᵀθ > 0)` for a fresh sample.
    pub fn accuracy(&self, theta: &Vector) -> Result<f64> {
        classifier_accuracy(theta, self)
    }

    /// `Φ(‖μ‖/σ)`, attained by every positive multiple of `μ`.
    pub fn optimal_accuracy(&self) -> f64 {
        std_normal_cdf(self.mu_norm() / self.sigma)
    }
}

/// `Φ(w)·exp(w²/2)`, with a Mills-ratio continued fraction in the far left
/// tail where the direct product under/overflows.
fn phi_times_gauss_inverse(w: f64) -> f64 {
    if w > -25.0 {
        return std_normal_cdf(w) * (0.5 * w * w).exp();
    }
    // Φ(−x)·e^{x²/2} = R(x)/√(2π), R(x) = 1/(x + 1/(x + 2/(x + …))).
    let x = -w;
    let mut tail = x;
    for k in (1..=60).rev() {
        tail = x + k as f64 / tail;
    }
    INV_SQRT_2PI / tail
}

/// Coefficient `ρ*` of the unique population minimiser `θ* = ρ*μ`.
///
/// Logistic: `2/σ²`. Hinge: bisection for `w` in
/// `Φ(w)·e^{w²/2} = σ/(‖μ‖√(2π))` on `[−‖μ‖/σ + 1e-12, 40]` (the left side
/// increases in `w`), then `r = σ/(‖μ‖(w + ‖μ‖/σ))` and `ρ* = r/σ²`.
pub fn minimizer_rho_star(kind: LossKind, model: &GaussianFoldedModel) -> Result<f64> {
    model.require_noise()?;
    let sigma = model.sigma;
    match kind {
        LossKind::Logistic => Ok(2.0 / (sigma * sigma)),
        LossKind::Hinge => {
            let m = model.mu_norm();
            let w = hinge_w(m, sigma);
            let r = sigma / (m * (w + m / sigma));
            Ok(r / (sigma * sigma))
        }
    }
}

/// Root `w` of the hinge stationarity relation.
pub fn hinge_w(mu_norm: f64, sigma: f64) -> f64 {
    let target = sigma / mu_norm * INV_SQRT_2PI;
    let h = |w: f64| phi_times_gauss_inverse(w) - target;
    let mut lo = -mu_norm / sigma + 1e-12;
    let mut hi = 40.0;
    assert!(
        h(lo) < 0.0 && h(hi) > 0.0,
        "hinge minimiser bracket does not straddle the root (mu_norm {mu_norm}, sigma {sigma})"
    );
    while hi - lo > 1e-12 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if h(mid) < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Residual of the hinge relation at `w`: `Φ(w)e^{w²/2} − σ/(‖μ‖√(2π))`.
pub fn hinge_relation_residual(w: f64, mu_norm: f64, sigma: f64) -> f64 {
    phi_times_gauss_inverse(w) - sigma / mu_norm * INV_SQRT_2PI
}

fn check_theta(theta: &Vector, model: &GaussianFoldedModel) -> Result<()> {
    check_dims(model.dim(), theta.dim())
}

/// `P(ξᵀθ > 0) = Φ(μᵀθ/(σ‖θ‖))`.
pub fn classifier_accuracy(theta: &Vector, model: &GaussianFoldedModel) -> Result<f64> {
    check_theta(theta, model)?;
    if theta.is_zero() {
        return Err(invalid("theta", "must be nonzero"));
    }
    let proj = dot(model.mu.as_slice(), theta.as_slice());
    if model.sigma == 0.0 {
        return Ok(if proj > 0.0 { 1.0 } else { 0.0 });
    }
    Ok(std_normal_cdf(proj / (model.sigma * theta.norm())))
}

/// Accuracy of the affine rule `predict 1 ⇔ (ζ − offset)ᵀθ > 0` on the raw
/// mixture `½N(mu0, σ²I) + ½N(mu1, σ²I)`.
pub fn mixture_accuracy(theta: &[f64], offset: &[f64], mu0: &[f64], mu1: &[f64], sigma: f64) -> f64 {
    let norm = dot(theta, theta).sqrt();
    if norm == 0.0 {
        return 0.0;
    }
    let m1: f64 = mu1.iter().zip(offset).zip(theta).map(|((a, o), t)| (a - o) * t).sum();
    let m0: f64 = mu0.iter().zip(offset).zip(theta).map(|((a, o), t)| (o - a) * t).sum();
    if sigma == 0.0 {
        return 0.5 * ((m1 > 0.0) as u8 as f64 + (m0 > 0.0) as u8 as f64);
    }
    let s = sigma * norm;
    0.5 * (std_normal_cdf(m1 / s) + std_normal_cdf(m0 / s))
}

/// `P(ξ̂ᵀθ ≥ 1) = Φ((μᵀθ − 1)/(σ‖θ‖))`; zero for `θ = 0`.
pub fn termination_probability(theta: &Vector, model: &GaussianFoldedModel) -> Result<f64> {
    check_theta(theta, model)?;
    if theta.is_zero() {
        return Ok(0.0);
    }
    let proj = dot(model.mu.as_slice(), theta.as_slice());
    if model.sigma == 0.0 {
        return Ok(if proj >= 1.0 { 1.0 } else { 0.0 });
    }
    Ok(std_normal_cdf((proj - 1.0) / (model.sigma * theta.norm())))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Regime {
    Low,
    High,
}

/// Regime threshold `c`: 0.33 (logistic), 1.25 (hinge).
pub fn regime_threshold(kind: LossKind) -> f64 {
    match kind {
        LossKind::Logistic => 0.33,
        LossKind::Hinge => 1.25,
    }
}

/// `Low` iff `σ ≤ c‖μ‖`.
pub fn regime_of(model: &GaussianFoldedModel, kind: LossKind) -> Regime {
    if model.sigma <= regime_threshold(kind) * model.mu_norm() {
        Regime::Low
    } else {
        Regime::High
    }
}

/// Low-regime constants `(c, b, M)`.
pub fn low_regime_constants(kind: LossKind, mu_norm: f64, alpha: f64) -> (f64, f64, f64) {
    let a = alpha * mu_norm * mu_norm;
    let m = match kind {
        LossKind::Logistic => 501.0 + 640.0 * a,
        LossKind::Hinge => 501.0 + 782.0 * a,
    };
    (regime_threshold(kind), a, m)
}

/// Per-loss constants of the drift analysis for one `(model, α)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundParams {
    pub kind: LossKind,
    pub alpha: f64,
    /// Regime threshold on `σ/‖μ‖`.
    pub c: f64,
    /// Drift decrement per iteration, `α‖μ‖²`.
    pub b: f64,
    /// Offset of the low-regime drift function.
    pub m: f64,
    pub rho_star: f64,
    /// Cap on `σ‖θ̃‖` in the high-regime target set.
    pub c_prime: f64,
    /// Lower bound on the termination probability inside the target set.
    pub delta: f64,
}

impl BoundParams {
    pub fn new(kind: LossKind, model: &GaussianFoldedModel, alpha: f64) -> Result<Self> {
        if !(alpha >= 0.0) || !alpha.is_finite() {
            return Err(invalid("alpha", "must be finite and non-negative"));
        }
        let (c, b, m) = low_regime_constants(kind, model.mu_norm(), alpha);
        // A noiseless model is always in the low regime; the high-regime
        // constants are then undefined and set to +∞.
        let (rho_star, c_prime) = if model.sigma > 0.0 {
            let rho_star = minimizer_rho_star(kind, model)?;
            let c_prime = match kind {
                LossKind::Logistic => 436.0,
                LossKind::Hinge => 8.0 + 10.0 * rho_star * model.sigma * model.sigma,
            };
            (rho_star, c_prime)
        } else {
            (f64::INFINITY, f64::INFINITY)
        };
        let mut params = Self {
            kind,
            alpha,
            c,
            b,
            m,
            rho_star,
            c_prime,
            delta: 0.5,
        };
        if regime_of(model, kind) == Regime::High {
            params.delta = high_set_delta(&params, model);
        }
        Ok(params)
    }
}

/// Infimum over the high-regime target set of the termination probability.
///
/// For fixed `ρ` the probability `Φ((ρ‖μ‖² − 1)/(σ√(ρ²‖μ‖² + t²)))` is
/// extremal in `t = ‖θ̃‖` at `t = 0` or `t = c′/σ`; `ρ` is scanned on a fine
/// grid of the closed interval `[ρ*/2, 3ρ*/2]`.
fn high_set_delta(params: &BoundParams, model: &GaussianFoldedModel) -> f64 {
    let m2 = model.mu_norm().powi(2);
    let sigma = model.sigma;
    let t_max = params.c_prime / sigma;
    let lo = 0.5 * params.rho_star;
    let n = 2000;
    (0..=n)
        .map(|i| lo + params.rho_star * i as f64 / n as f64)
        .flat_map(|rho| {
            [0.0, t_max].map(|t| std_normal_cdf((rho * m2 - 1.0) / (sigma * (rho * rho * m2 + t * t).sqrt())))
        })
        .fold(1.0, f64::min)
}

/// A target set `C` together with the constants defining it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegimeSet {
    pub regime: Regime,
    pub params: BoundParams,
}

impl RegimeSet {
    pub fn new(regime: Regime, params: BoundParams) -> Self {
        Self { regime, params }
    }

    /// The set matching the model's own regime.
    pub fn for_model(kind: LossKind, model: &GaussianFoldedModel, alpha: f64) -> Result<Self> {
        Ok(Self::new(regime_of(model, kind), BoundParams::new(kind, model, alpha)?))
    }

    pub fn contains(&self, theta: &[f64], model: &GaussianFoldedModel) -> bool {
        let proj = dot(model.mu.as_slice(), theta);
        match self.regime {
            Regime::Low => proj >= 1.0,
            Regime::High => {
                let (rho, perp) = decompose(theta, model);
                (rho - self.params.rho_star).abs() < 0.5 * self.params.rho_star
                    && model.sigma * perp <= self.params.c_prime
            }
        }
    }

    /// Drift function `V`: `(M − μᵀθ)²` (low), `‖θ − ρ*μ‖²/(2α)` (high).
    pub fn drift(&self, theta: &[f64], model: &GaussianFoldedModel) -> f64 {
        match self.regime {
            Regime::Low => (self.params.m - dot(model.mu.as_slice(), theta)).powi(2),
            Regime::High => {
                let rs = self.params.rho_star;
                let sq: f64 = theta.iter().zip(model.mu.as_slice()).map(|(t, m)| (t - rs * m).powi(2)).sum();
                sq / (2.0 * self.params.alpha)
            }
        }
    }
}

/// `θ = ρμ + θ̃` with `μᵀθ̃ = 0`; returns `(ρ, ‖θ̃‖)`.
pub fn decompose(theta: &[f64], model: &GaussianFoldedModel) -> (f64, f64) {
    let mu = model.mu.as_slice();
    let m2 = dot(mu, mu);
    let rho = dot(mu, theta) / m2;
    let perp: f64 = theta.iter().zip(mu).map(|(t, m)| (t - rho * m).powi(2)).sum();
    (rho, perp.sqrt())
}

pub fn target_set_contains(set: &RegimeSet, theta: &Vector, model: &GaussianFoldedModel) -> Result<bool> {
    check_theta(theta, model)?;
    Ok(set.contains(theta.as_slice(), model))
}

pub fn drift_value(set: &RegimeSet, theta: &Vector, model: &GaussianFoldedModel) -> Result<f64> {
    check_theta(theta, model)?;
    Ok(set.drift(theta.as_slice(), model))
}

/// Upper bound on `E[T]` in the low regime:
/// `2 + (2M²/b)·(Φᶜ(‖μ‖/σ) + (ασ³/‖μ‖)·φ-factor·exp(−‖μ‖²/(2σ²)) + 1)`.
pub fn low_regime_expected_t_bound(kind: LossKind, model: &GaussianFoldedModel, alpha: f64) -> Result<f64> {
    if !(alpha > 0.0) {
        return Err(invalid("alpha", "must be positive"));
    }
    let found = regime_of(model, kind);
    if found != Regime::Low {
        return Err(Error::RegimeMismatch {
            expected: Regime::Low,
            found,
        });
    }
    let mu = model.mu_norm();
    let sigma = model.sigma;
    let (_, b, m) = low_regime_constants(kind, mu, alpha);
    let ratio = mu / sigma;
    let tail = std_normal_ccdf(ratio);
    let gauss = if sigma == 0.0 {
        0.0
    } else {
        alpha * sigma.powi(3) / mu * INV_SQRT_2PI * (-0.5 * ratio * ratio).exp()
    };
    Ok(2.0 + 2.0 * m * m / b * (tail + gauss + 1.0))
}

/// Step-size ceiling `A‖μ‖²/(σ²(‖μ‖² + dσ²))` for the high regime, with the
/// caller-supplied constant `A` (the analysis leaves it unspecified; 1.0 is a
/// heuristic default).
pub fn high_regime_max_step(model: &GaussianFoldedModel, universal_a: f64) -> Result<f64> {
    if !(universal_a > 0.0) {
        return Err(invalid("universal_a", "must be positive"));
    }
    model.require_noise()?;
    let m2 = model.mu_norm().powi(2);
    let s2 = model.sigma * model.sigma;
    Ok(universal_a * m2 / (s2 * (m2 + model.dim() as f64 * s2)))
}

/// `σα·sqrt(2/π)·E[T]`, bounding `E[|vᵀθ_T|]` for unit `v ⊥ θ*`.
pub fn angle_bound(model: &GaussianFoldedModel, alpha: f64, expected_t: f64) -> f64 {
    model.sigma * alpha * crate::numerics::mean_abs_std_normal() * expected_t
}

/// `|g′(ρ*)|` at the computed minimiser.
pub fn minimizer_residual(kind: LossKind, model: &GaussianFoldedModel, quad: &NormalQuadrature) -> Result<f64> {
    let rho = minimizer_rho_star(kind, model)?;
    Ok(ray_derivative(kind, rho, model.mu_norm(), model.sigma, quad)?.abs())
}
