//! Gaussian quadrature for one-dimensional normal expectations.
//!
//! Two integrators live here. [`QuadratureRule`] is a physicists'
//! Gauss–Hermite rule, exact for polynomials up to degree `2n − 1` and the
//! natural choice for smooth integrands. [`NormalQuadrature`] is a composite
//! Gauss–Legendre rule on panels graded geometrically around a caller-given
//! focus point; it handles integrands that change quickly near one point
//! (a logistic with a steep slope, a kink) where a global polynomial fit
//! converges slowly.

use std::f64::consts::PI;

use crate::error::{invalid, Result};
use crate::numerics::normal::std_normal_pdf;

pub const DEFAULT_HERMITE_ORDER: usize = 128;

/// Largest order whose Hermite recurrence stays within `f64` range at the
/// outermost node.
pub const MAX_HERMITE_ORDER: usize = 400;

/// Nodes and weights of an `order`-point rule for `∫ f(x) e^{−x²} dx`.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadratureRule {
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

impl QuadratureRule {
    /// Gauss–Hermite rule. Positive roots of the orthonormal Hermite
    /// function are bracketed by a scan finer than the smallest root gap,
    /// then polished by Newton steps kept inside the bracket. Orders above
    /// [`MAX_HERMITE_ORDER`] overflow the recurrence and are rejected.
    pub fn gauss_hermite(order: usize) -> Result<Self> {
        if order < 1 {
            return Err(invalid("order", "quadrature order must be at least 1"));
        }
        if order > MAX_HERMITE_ORDER {
            return Err(invalid("order", format!("quadrature order must be at most {MAX_HERMITE_ORDER}")));
        }
        let n = order;
        let nf = n as f64;
        let pim4 = PI.powf(-0.25);
        let deriv_scale = (2.0 * nf).sqrt();
        let edge = (2.0 * nf + 1.0).sqrt();
        let step = 0.05 * PI / edge;
        let mut positive = Vec::with_capacity(n / 2);
        let mut weights = Vec::with_capacity(n / 2);
        let mut lo = 0.5 * step;
        let (mut f_lo, _) = hermite_orthonormal(n, lo, pim4);
        while lo < edge + 1.0 && positive.len() < n / 2 {
            let hi = lo + step;
            let (f_hi, _) = hermite_orthonormal(n, hi, pim4);
            if f_lo == 0.0 || f_lo.signum() != f_hi.signum() {
                let (z, pp) = polish_root(n, lo, hi, f_lo, pim4, deriv_scale);
                positive.push(z);
                weights.push(2.0 / (pp * pp));
            }
            lo = hi;
            f_lo = f_hi;
        }
        if positive.len() != n / 2 {
            return Err(invalid("order", format!("root scan found {} of {} roots", positive.len(), n / 2)));
        }
        let mut x: Vec<f64> = positive.iter().rev().map(|z| -z).collect();
        let mut w: Vec<f64> = weights.iter().rev().copied().collect();
        if n % 2 == 1 {
            let (_, p2) = hermite_orthonormal(n, 0.0, pim4);
            let pp = deriv_scale * p2;
            x.push(0.0);
            w.push(2.0 / (pp * pp));
        }
        x.extend(positive.iter().copied());
        w.extend(weights.iter().copied());
        Ok(Self {
            nodes: x,
            weights: w,
        })
    }

    pub fn order(&self) -> usize {
        self.nodes.len()
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }
}

impl Default for QuadratureRule {
    fn default() -> Self {
        Self::gauss_hermite(DEFAULT_HERMITE_ORDER).expect("default order is valid")
    }
}

/// Newton on `[lo, hi]` with a bisection fallback; returns the root and
/// the derivative `h_n'` there.
fn polish_root(n: usize, mut lo: f64, mut hi: f64, f_lo: f64, pim4: f64, deriv_scale: f64) -> (f64, f64) {
    let sign_lo = f_lo.signum();
    let mut z = 0.5 * (lo + hi);
    for _ in 0..200 {
        let (p1, p2) = hermite_orthonormal(n, z, pim4);
        if p1 == 0.0 {
            break;
        }
        if p1.signum() == sign_lo {
            lo = z;
        } else {
            hi = z;
        }
        let pp = deriv_scale * p2;
        let newton = z - p1 / pp;
        let next = if newton > lo && newton < hi { newton } else { 0.5 * (lo + hi) };
        let done = (next - z).abs() <= 1e-15 * z.abs();
        z = next;
        if done {
            break;
        }
    }
    let (_, p2) = hermite_orthonormal(n, z, pim4);
    (z, deriv_scale * p2)
}

/// Returns `(h_n(z), h_{n-1}(z))` for the orthonormal Hermite functions.
fn hermite_orthonormal(n: usize, z: f64, pim4: f64) -> (f64, f64) {
    let mut p1 = pim4;
    let mut p2 = 0.0;
    for j in 0..n {
        let p3 = p2;
        p2 = p1;
        let jf = j as f64;
        p1 = z * (2.0 / (jf + 1.0)).sqrt() * p2 - (jf / (jf + 1.0)).sqrt() * p3;
    }
    (p1, p2)
}

/// `E[f(Z)]` for `Z ~ N(mean, sigma²)` by Gauss–Hermite:
/// `Σ wᵢ f(mean + √2·sigma·xᵢ) / √π`.
pub fn gauss_hermite_expectation<F: Fn(f64) -> f64>(
    f: F,
    mean: f64,
    sigma: f64,
    rule: &QuadratureRule,
) -> Result<f64> {
    if !(sigma > 0.0) {
        return Err(invalid("sigma", "must be positive"));
    }
    let scale = std::f64::consts::SQRT_2 * sigma;
    let sum: f64 = rule
        .nodes
        .iter()
        .zip(&rule.weights)
        .map(|(&x, &w)| w * f(mean + scale * x))
        .sum();
    Ok(sum / PI.sqrt())
}

/// Gauss–Legendre nodes and weights on `[−1, 1]`.
fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    let nf = n as f64;
    for i in 0..n.div_ceil(2) {
        let mut z = (PI * (i as f64 + 0.75) / (nf + 0.5)).cos();
        let mut pp = 1.0;
        for _ in 0..100 {
            let mut p1 = 1.0;
            let mut p2 = 0.0;
            for j in 0..n {
                let p3 = p2;
                p2 = p1;
                let jf = j as f64;
                p1 = ((2.0 * jf + 1.0) * z * p2 - jf * p3) / (jf + 1.0);
            }
            pp = nf * (z * p1 - p2) / (z * z - 1.0);
            let z1 = z;
            z = z1 - p1 / pp;
            if (z - z1).abs() <= 1e-16 {
                break;
            }
        }
        x[i] = -z;
        x[n - 1 - i] = z;
        w[i] = 2.0 / ((1.0 - z * z) * pp * pp);
        w[n - 1 - i] = w[i];
    }
    (x, w)
}

/// Composite Gauss–Legendre integrator for `E[f(Z)]`, `Z ~ N(mean, sd²)`.
///
/// Works in the standardised variable `t = (z − mean)/sd` on `[−T, T]`
/// with `T = 38` (beyond which `φ(t)` underflows). Panels start at width
/// `first_width` on both sides of the focus point and grow by `growth` per
/// panel up to `max_width`.
#[derive(Debug, Clone)]
pub struct NormalQuadrature {
    nodes: Vec<f64>,
    weights: Vec<f64>,
    first_width: f64,
    growth: f64,
    max_width: f64,
}

const T_MAX: f64 = 38.0;

impl Default for NormalQuadrature {
    fn default() -> Self {
        Self::new(16, 0.02, 1.2, 0.5)
    }
}

impl NormalQuadrature {
    pub fn new(points_per_panel: usize, first_width: f64, growth: f64, max_width: f64) -> Self {
        assert!(points_per_panel >= 1 && first_width > 0.0 && growth >= 1.0 && max_width >= first_width);
        let (nodes, weights) = gauss_legendre(points_per_panel);
        Self {
            nodes,
            weights,
            first_width,
            growth,
            max_width,
        }
    }

    /// Panel boundaries in `t`, ascending.
    fn panels(&self, focus_t: f64) -> Vec<f64> {
        let c = focus_t.clamp(-T_MAX, T_MAX);
        let mut right = vec![c];
        let mut step = self.first_width;
        let mut pos = c;
        while pos < T_MAX {
            pos = (pos + step).min(T_MAX);
            right.push(pos);
            step = (step * self.growth).min(self.max_width);
        }
        let mut left = Vec::new();
        let mut step = self.first_width;
        let mut pos = c;
        while pos > -T_MAX {
            pos = (pos - step).max(-T_MAX);
            left.push(pos);
            step = (step * self.growth).min(self.max_width);
        }
        left.reverse();
        left.extend(right);
        left
    }

    /// `E[f(Z)]`, refining near `focus` (in the units of `Z`); pass `None`
    /// to centre the grading on the mean.
    pub fn expectation<F: Fn(f64) -> f64>(&self, f: F, mean: f64, sd: f64, focus: Option<f64>) -> f64 {
        let focus_t = focus.map_or(0.0, |z| (z - mean) / sd);
        let edges = self.panels(focus_t);
        let mut total = 0.0;
        for pair in edges.windows(2) {
            let (a, b) = (pair[0], pair[1]);
            let half = 0.5 * (b - a);
            let mid = 0.5 * (a + b);
            let mut panel = 0.0;
            for (&x, &w) in self.nodes.iter().zip(&self.weights) {
                let t = mid + half * x;
                panel += w * f(mean + sd * t) * std_normal_pdf(t);
            }
            total += half * panel;
        }
        total
    }
}


#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::RngState;

    #[test]
    fn weights_sum_to_sqrt_pi() {
        for n in [1, 2, 3, 7, 20, 64, 128, 200, 301, MAX_HERMITE_ORDER] {
            let rule = QuadratureRule::gauss_hermite(n).unwrap();
            assert_eq!(rule.order(), n);
            assert_eq!(rule.nodes().len(), rule.weights().len());
            let s: f64 = rule.weights().iter().sum();
            assert!((s - PI.sqrt()).abs() < 1e-12, "n = {n}: {s}");
        }
    }

    #[test]
    fn order_zero_rejected() {
        assert!(QuadratureRule::gauss_hermite(0).is_err());
        assert!(QuadratureRule::gauss_hermite(MAX_HERMITE_ORDER + 1).is_err());
    }

    #[test]
    fn nodes_symmetric_and_sorted() {
        let rule = QuadratureRule::gauss_hermite(33).unwrap();
        let x = rule.nodes();
        for i in 0..x.len() {
            assert!((x[i] + x[x.len() - 1 - i]).abs() < 1e-13);
            if i > 0 {
                assert!(x[i] > x[i - 1]);
            }
        }
        assert_eq!(x[16], 0.0);
    }

    #[test]
    fn moments_exact() {
        let rule = QuadratureRule::default();
        assert!((gauss_hermite_expectation(|_| 1.0, 0.3, 2.0, &rule).unwrap() - 1.0).abs() < 1e-12);
        assert!((gauss_hermite_expectation(|z| z, -1.7, 0.4, &rule).unwrap() + 1.7).abs() < 1e-12);
        let r64 = QuadratureRule::gauss_hermite(64).unwrap();
        assert!((gauss_hermite_expectation(|z| z * z, 0.0, 1.0, &r64).unwrap() - 1.0).abs() < 1e-12);
        // Degree 7 with n = 4: E[Z^6] = 15 for a standard normal.
        let r4 = QuadratureRule::gauss_hermite(4).unwrap();
        assert!((gauss_hermite_expectation(|z| z.powi(6), 0.0, 1.0, &r4).unwrap() - 15.0).abs() < 1e-12);
        let r1 = QuadratureRule::gauss_hermite(1).unwrap();
        assert!((gauss_hermite_expectation(|z| z, 2.5, 1.0, &r1).unwrap() - 2.5).abs() < 1e-12);
    }

    #[test]
    fn nonpositive_sigma_rejected() {
        let rule = QuadratureRule::gauss_hermite(8).unwrap();
        assert!(gauss_hermite_expectation(|z| z, 0.0, 0.0, &rule).is_err());
    }

    #[test]
    fn legendre_integrates_polynomials() {
        let (x, w) = gauss_legendre(16);
        let s: f64 = w.iter().sum();
        assert!((s - 2.0).abs() < 1e-14);
        let i: f64 = x.iter().zip(&w).map(|(x, w)| w * x.powi(30)).sum();
        assert!((i - 2.0 / 31.0).abs() < 1e-14);
    }

    #[test]
    fn composite_moments() {
        let q = NormalQuadrature::default();
        for &(m, s, focus) in &[(0.0, 1.0, None), (1.0, 0.1, Some(0.0)), (-3.0, 5.0, Some(40.0))] {
            assert!((q.expectation(|_| 1.0, m, s, focus) - 1.0).abs() < 1e-14);
            assert!((q.expectation(|z| z, m, s, focus) - m).abs() < 1e-13 * (1.0 + m.abs()));
            assert!((q.expectation(|z| (z - m) * (z - m), m, s, focus) - s * s).abs() < 1e-13 * s * s);
        }
    }

    #[test]
    fn composite_agrees_with_closed_form_kink() {
        // E[max(1 − Z, 0)] = (1 − m)Φ(z) + sφ(z) with z = (1 − m)/s.
        use crate::numerics::normal::std_normal_cdf;
        let q = NormalQuadrature::default();
        let (m, s) = (0.7, 0.3);
        let z = (1.0 - m) / s;
        let exact = (1.0 - m) * std_normal_cdf(z) + s * std_normal_pdf(z);
        let got = q.expectation(|x| (1.0 - x).max(0.0), m, s, Some(1.0));
        assert!((got - exact).abs() < 1e-14, "{got} vs {exact}");
    }

    #[test]
    fn hermite_matches_monte_carlo() {
        let rule = QuadratureRule::default();
        let fs: [(&str, fn(f64) -> f64); 3] = [
            ("abs", |z: f64| z.abs()),
            ("sigmoid", |z: f64| 1.0 / (1.0 + z.exp())),
            ("hinge", |z: f64| (1.0 - z).max(0.0)),
        ];
        let n = 1_000_000;
        for (k, (name, f)) in fs.iter().enumerate() {
            let exact = gauss_hermite_expectation(f, 0.0, 1.0, &rule).unwrap();
            let mut rng = RngState::new(11, k as u64).rng();
            let (mut s, mut s2) = (0.0, 0.0);
            for _ in 0..n {
                let v = f(rng.standard_normal());
                s += v;
                s2 += v * v;
            }
            let mean = s / n as f64;
            let se = ((s2 / n as f64 - mean * mean) / n as f64).sqrt();
            assert!((mean - exact).abs() < 4.0 * se, "{name}: {mean} vs {exact} (se {se})");
        }
    }
}
