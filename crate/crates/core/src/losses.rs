//! Logistic and hinge losses on folded samples (label fixed to 1), their
//! SGD directions, and the population objective restricted to the ray
//! `{ρμ}` under the folded Gaussian model.
//!
//! On the ray, `ξᵀ(ρμ) = ρz` with `z = μᵀξ ~ N(‖μ‖², σ²‖μ‖²)`, so the
//! objective `g(ρ) = E[ℓ(ρz)]` is a one-dimensional normal expectation.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::numerics::{
    std_normal_cdf, std_normal_pdf, truncated_normal_lower_moment, truncated_normal_upper_moment, NormalQuadrature,
    Vector,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LossKind {
    Logistic,
    Hinge,
}

impl LossKind {
    pub const ALL: [LossKind; 2] = [LossKind::Logistic, LossKind::Hinge];

    pub fn name(self) -> &'static str {
        match self {
            LossKind::Logistic => "logistic",
            LossKind::Hinge => "hinge",
        }
    }
}

impl std::fmt::Display for LossKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for LossKind {
    type Err = crate::Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "logistic" | "log" | "l" => Ok(LossKind::Logistic),
            "hinge" | "h" => Ok(LossKind::Hinge),
            other => Err(invalid("loss", format!("unknown loss `{other}`"))),
        }
    }
}

/// `log(1 + e^x)` without overflow.
#[inline]
pub fn softplus(x: f64) -> f64 {
    x.max(0.0) + (-x.abs()).exp().ln_1p()
}

/// `1 / (1 + e^x)` without overflow.
#[inline]
fn logistic_weight(x: f64) -> f64 {
    if x > 0.0 {
        let e = (-x).exp();
        e / (1.0 + e)
    } else {
        1.0 / (1.0 + x.exp())
    }
}

/// Loss of a folded sample with margin `ξᵀθ`.
pub fn loss_value(kind: LossKind, margin: f64) -> f64 {
    match kind {
        LossKind::Logistic => softplus(-margin),
        LossKind::Hinge => (1.0 - margin).max(0.0),
    }
}

/// Scalar `c` with `−∇_θ ℓ(ξᵀθ) = c·ξ`. The hinge subgradient includes the
/// kink: `c = 1` when `margin ≤ 1`.
#[inline]
pub fn direction_scale(kind: LossKind, margin: f64) -> f64 {
    match kind {
        LossKind::Logistic => logistic_weight(margin),
        LossKind::Hinge => {
            if margin <= 1.0 {
                1.0
            } else {
                0.0
            }
        }
    }
}

/// `−∇_θ ℓ(ξᵀθ)` evaluated at `margin = ξᵀθ`; SGD moves by `α` times this.
pub fn update_direction(kind: LossKind, xi: &Vector, margin: f64) -> Vector {
    xi.scaled(direction_scale(kind, margin))
}

fn check_ray_args(mu_norm: f64, sigma: f64) -> Result<()> {
    if !(mu_norm > 0.0) || !mu_norm.is_finite() {
        return Err(invalid("mu_norm", "must be positive and finite"));
    }
    if !(sigma > 0.0) || !sigma.is_finite() {
        return Err(invalid("sigma", "must be positive and finite"));
    }
    Ok(())
}

/// `g(ρ) = E[ℓ(ρz)]`, `z ~ N(‖μ‖², σ²‖μ‖²)`.
///
/// Logistic uses `quad` with panels refined around `z = 0`, where the
/// integrand bends on the scale `1/ρ`. Hinge is closed form:
/// with `b = 1/ρ` and `t = (b − ‖μ‖²)/(σ‖μ‖)`,
/// `g(ρ) = ρσ‖μ‖·(φ(t) + tΦ(t))` for `ρ > 0`.
pub fn ray_objective(kind: LossKind, rho: f64, mu_norm: f64, sigma: f64, quad: &NormalQuadrature) -> Result<f64> {
    check_ray_args(mu_norm, sigma)?;
    let mean = mu_norm * mu_norm;
    let sd = sigma * mu_norm;
    Ok(match kind {
        LossKind::Logistic => quad.expectation(|z| softplus(-rho * z), mean, sd, Some(0.0)),
        LossKind::Hinge => {
            if rho == 0.0 {
                1.0
            } else if rho > 0.0 {
                // `mass − ρ·partial_mean` of the lower truncation at 1/ρ,
                // with the leading terms cancelled analytically.
                let t = (1.0 / rho - mean) / sd;
                rho * sd * (std_normal_pdf(t) + t * std_normal_cdf(t))
            } else {
                // ρz ≤ 1 ⇔ z ≥ 1/ρ when ρ < 0.
                let (mass, partial) = truncated_normal_upper_moment(mean, sd, 1.0 / rho);
                mass - rho * partial
            }
        }
    })
}

/// `g′(ρ)`: logistic `−E[z/(1 + e^{ρz})]`, hinge `−E[z·1{z ≤ 1/ρ}]`.
/// The hinge form requires `ρ > 0`.
pub fn ray_derivative(kind: LossKind, rho: f64, mu_norm: f64, sigma: f64, quad: &NormalQuadrature) -> Result<f64> {
    check_ray_args(mu_norm, sigma)?;
    let mean = mu_norm * mu_norm;
    let sd = sigma * mu_norm;
    match kind {
        LossKind::Logistic => Ok(-quad.expectation(|z| z * logistic_weight(rho * z), mean, sd, Some(0.0))),
        LossKind::Hinge => {
            if !(rho > 0.0) {
                return Err(invalid("rho", "hinge ray derivative needs rho > 0"));
            }
            Ok(-truncated_normal_lower_moment(mean, sd, 1.0 / rho).1)
        }
    }
}
