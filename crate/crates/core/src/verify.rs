//! Monte-Carlo estimators that check the stopping-time bounds by simulation.
//!
//! Trial `i` always runs on `rng.child(i)`, so results do not depend on how
//! trials are scheduled across threads.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::losses::direction_scale;
use crate::numerics::{dot, fill_gaussian, Rng, RngState, Vector};
use crate::sgd::{run, run_extra_sample, run_extra_sample_gated, run_until, SgdConfig, StopRule};
use crate::theory::{termination_probability, GaussianFoldedModel, Regime, RegimeSet};

/// Mean and standard error over uncensored trials.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrialStats {
    pub mean: f64,
    /// Sample standard deviation over `√(uncensored count)`.
    pub stderr: f64,
    pub n_trials: usize,
    pub n_censored: usize,
}

impl TrialStats {
    /// `values` holds the uncensored observations. With none, mean and
    /// stderr are NaN; with one, stderr is NaN.
    pub fn from_values(values: &[f64], n_censored: usize) -> Self {
        let n = values.len();
        let mean = values.iter().sum::<f64>() / n as f64;
        let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n as f64 - 1.0);
        Self {
            mean,
            stderr: (var / n as f64).sqrt(),
            n_trials: n + n_censored,
            n_censored,
        }
    }

    pub fn n_uncensored(&self) -> usize {
        self.n_trials - self.n_censored
    }
}

/// Runs `f(rng.child(i))` for `i < n` in parallel; results in trial order.
pub fn run_trials<T, F>(n: usize, rng: RngState, f: F) -> Result<Vec<T>>
where
    T: Send,
    F: Fn(RngState) -> Result<T> + Sync,
{
    (0..n as u64).into_par_iter().map(|i| f(rng.child(i))).collect()
}

fn check_trials(n: usize) -> Result<()> {
    if n < 2 {
        return Err(invalid("n_trials", "must be at least 2"));
    }
    Ok(())
}

fn stats_of(outcomes: &[Option<f64>]) -> TrialStats {
    let values: Vec<f64> = outcomes.iter().flatten().copied().collect();
    TrialStats::from_values(&values, outcomes.len() - values.len())
}

/// Stopping index `T` under `config.rule` with fresh model samples.
pub fn estimate_expected_t(
    model: &GaussianFoldedModel,
    config: &SgdConfig,
    n_trials: usize,
    rng: RngState,
) -> Result<TrialStats> {
    check_trials(n_trials)?;
    let out = run_trials(n_trials, rng, |r| {
        let res = run(&mut model.source(), config, r)?;
        Ok((!res.censored).then_some(res.iterations as f64))
    })?;
    Ok(stats_of(&out))
}

/// First entry time `τ₁ = inf{k > 0 : θₖ ∈ C}` of plain SGD started at `theta0 ∉ C`.
pub fn estimate_hitting_time(
    theta0: &Vector,
    set: &RegimeSet,
    model: &GaussianFoldedModel,
    config: &SgdConfig,
    n_trials: usize,
    rng: RngState,
) -> Result<TrialStats> {
    check_trials(n_trials)?;
    if set.contains(theta0.as_slice(), model) {
        return Err(Error::TargetSet("starts inside"));
    }
    let out = run_trials(n_trials, rng, |r| {
        let h = run_until(&mut model.source(), config.kind, config.alpha, theta0, config.max_iter, r, |t| {
            set.contains(t, model)
        })?;
        Ok((!h.censored).then_some(h.iterations as f64))
    })?;
    Ok(stats_of(&out))
}

/// Deviation `|vᵀθ_T|` alongside `T`, plus the per-trial slack
/// `|vᵀθ_T| − σα√(2/π)·T` whose mean must be non-positive.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AngleReport {
    pub deviation: TrialStats,
    pub stopping_time: TrialStats,
    pub slack: TrialStats,
}

pub fn estimate_angle_deviation(
    model: &GaussianFoldedModel,
    config: &SgdConfig,
    unit_v: &Vector,
    n_trials: usize,
    rng: RngState,
) -> Result<AngleReport> {
    check_trials(n_trials)?;
    let mu = model.mu();
    let along = unit_v.dot(mu)?;
    if along.abs() > 1e-12 * mu.norm() {
        return Err(invalid("unit_v", "must be orthogonal to mu"));
    }
    if (unit_v.norm() - 1.0).abs() > 1e-12 {
        return Err(invalid("unit_v", "must have unit norm"));
    }
    let scale = crate::theory::angle_bound(model, config.alpha, 1.0);
    let out = run_trials(n_trials, rng, |r| {
        let res = run(&mut model.source(), config, r)?;
        if res.censored {
            return Ok(None);
        }
        let dev = dot(unit_v.as_slice(), res.theta_final.as_slice()).abs();
        let t = res.iterations as f64;
        Ok(Some((dev, t, dev - scale * t)))
    })?;
    let censored = out.iter().filter(|o| o.is_none()).count();
    let done: Vec<(f64, f64, f64)> = out.into_iter().flatten().collect();
    let col = |f: fn(&(f64, f64, f64)) -> f64| TrialStats::from_values(&done.iter().map(f).collect::<Vec<_>>(), censored);
    Ok(AngleReport {
        deviation: col(|x| x.0),
        stopping_time: col(|x| x.1),
        slack: col(|x| x.2),
    })
}

/// One probe of the drift inequality.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DriftProbe {
    pub theta: Vector,
    /// Monte-Carlo mean of `V(θ₁) − V(θ)` from `θ₀ = θ`.
    pub estimate: f64,
    pub stderr: f64,
    /// Required decrement `b = α‖μ‖²`.
    pub b: f64,
    pub pass: bool,
}

/// Estimates `E[V(θ₁) | θ₀ = θ] − V(θ)` at each probe from `n_mc` one-step
/// transitions. A probe passes when `estimate < −b + 4·stderr`; the strict
/// comparison makes a frozen chain (`α = 0`, so `b = 0` and every increment
/// is exactly 0) fail rather than pass vacuously.
pub fn check_drift_inequality(
    set: &RegimeSet,
    model: &GaussianFoldedModel,
    probes: &[Vector],
    n_mc: usize,
    rng: RngState,
) -> Result<Vec<DriftProbe>> {
    if n_mc < 2 {
        return Err(invalid("n_mc", "must be at least 2"));
    }
    for p in probes {
        if crate::theory::target_set_contains(set, p, model)? {
            return Err(Error::TargetSet("probe lies inside"));
        }
    }
    let params = &set.params;
    if set.regime == Regime::High && params.alpha == 0.0 {
        return Err(invalid("alpha", "the high-regime drift function needs alpha > 0"));
    }
    let mu = model.mu().as_slice();
    let d = model.dim();
    let b = params.b;
    probes
        .iter()
        .enumerate()
        .map(|(i, theta)| {
            let mut r: Rng = rng.child(i as u64).rng();
            let th = theta.as_slice();
            let gap = params.m - dot(mu, th);
            let centred: Vec<f64> = th.iter().zip(mu).map(|(t, m)| t - params.rho_star * m).collect();
            let mut xi = vec![0.0; d];
            let increments: Vec<f64> = (0..n_mc)
                .map(|_| {
                    fill_gaussian(&mut r, mu, model.sigma(), &mut xi);
                    let c = direction_scale(params.kind, dot(&xi, th));
                    match set.regime {
                        // V = (M − μᵀθ)², the step moves μᵀθ by δ = αc·μᵀξ.
                        Regime::Low => {
                            let delta = params.alpha * c * dot(mu, &xi);
                            delta * delta - 2.0 * gap * delta
                        }
                        // V = ‖θ − θ*‖²/(2α), the step is αc·ξ.
                        Regime::High => {
                            c * dot(&xi, &centred) + 0.5 * params.alpha * c * c * dot(&xi, &xi)
                        }
                    }
                })
                .collect();
            let s = TrialStats::from_values(&increments, 0);
            Ok(DriftProbe {
                theta: theta.clone(),
                estimate: s.mean,
                stderr: s.stderr,
                b,
                pass: s.mean < -b + 4.0 * s.stderr,
            })
        })
        .collect()
}

/// Probes with `μᵀθ` at each of `projections`, plus a seeded random
/// component orthogonal to `μ` of norm `perp_norm`.
pub fn drift_probes(model: &GaussianFoldedModel, projections: &[f64], perp_norm: f64, rng: RngState) -> Vec<Vector> {
    let mu = model.mu();
    let m2 = mu.norm().powi(2);
    let mut r = rng.rng();
    projections
        .iter()
        .map(|&a| {
            let mut perp = vec![0.0; mu.dim()];
            r.fill_standard_normal(&mut perp);
            let along = dot(&perp, mu.as_slice()) / m2;
            for (p, m) in perp.iter_mut().zip(mu.as_slice()) {
                *p -= along * m;
            }
            let n = dot(&perp, &perp).sqrt();
            let s = if n > 0.0 { perp_norm / n } else { 0.0 };
            let theta: Vec<f64> = perp.iter().zip(mu.as_slice()).map(|(p, m)| s * p + a / m2 * m).collect();
            Vector::new(theta).expect("finite")
        })
        .collect()
}

/// Smallest termination probability over `n` sampled members of the Low
/// target set `{μᵀθ ≥ 1}`: `μᵀθ = 1 + Exp(1)` (every fourth exactly 1) and a
/// Gaussian orthogonal part of random scale.
pub fn min_termination_probability_on_low_set(model: &GaussianFoldedModel, n: usize, rng: RngState) -> Result<f64> {
    let mut r = rng.rng();
    let mut worst = f64::INFINITY;
    for i in 0..n {
        let a = if i % 4 == 0 { 1.0 } else { 1.0 - r.uniform_open().ln() };
        let perp_norm = 10.0 * r.uniform_open();
        let probe = drift_probes(model, &[a], perp_norm, RngState::new(r.next_u64(), i as u64));
        let theta = &probe[0];
        if dot(model.mu().as_slice(), theta.as_slice()) < 1.0 {
            // Rounding pushed the projection just below 1; not a member.
            continue;
        }
        worst = worst.min(termination_probability(theta, model)?);
    }
    Ok(worst)
}

/// Extra-sample runs with and without the target-set gate on shared streams.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CouplingReport {
    pub plain: TrialStats,
    pub gated: TrialStats,
    /// Trials where the gated index fell below the plain one.
    pub violations: usize,
}

pub fn estimate_gated_coupling(
    set: &RegimeSet,
    model: &GaussianFoldedModel,
    config: &SgdConfig,
    n_trials: usize,
    rng: RngState,
) -> Result<CouplingReport> {
    check_trials(n_trials)?;
    let config = config.with_rule(StopRule::ExtraSample);
    let out = run_trials(n_trials, rng, |r| {
        let plain = run_extra_sample(&mut model.source(), &config, r)?;
        let gated = run_extra_sample_gated(&mut model.source(), &config, r, |t| set.contains(t, model))?;
        Ok((plain, gated))
    })?;
    let pick = |gated: bool| {
        out.iter()
            .map(|(p, g)| {
                let x = if gated { g } else { p };
                (!x.censored).then_some(x.iterations as f64)
            })
            .collect::<Vec<_>>()
    };
    let violations = out.iter().filter(|(p, g)| g.iterations < p.iterations).count();
    Ok(CouplingReport {
        plain: stats_of(&pick(false)),
        gated: stats_of(&pick(true)),
        violations,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::losses::LossKind;
    use crate::theory::low_regime_expected_t_bound;

    fn model(d: usize, sigma: f64) -> GaussianFoldedModel {
        GaussianFoldedModel::axis_aligned(d, 1.0, sigma).unwrap()
    }

    fn cfg(kind: LossKind, alpha: f64, rule: StopRule) -> SgdConfig {
        SgdConfig::new(kind, alpha, 1_000_000, rule).unwrap()
    }

    #[test]
    fn stats_fixture() {
        let s = TrialStats::from_values(&[1.0, 2.0, 3.0, 4.0], 1);
        assert_eq!((s.mean, s.n_trials, s.n_censored), (2.5, 5, 1));
        assert!((s.stderr - (5.0f64 / 3.0).sqrt() / 2.0).abs() < 1e-15);
        assert!(TrialStats::from_values(&[], 3).mean.is_nan());
    }

    #[test]
    fn frozen_chain_is_censored() {
        let c = SgdConfig::new(LossKind::Logistic, 0.0, 1000, StopRule::ExtraSample).unwrap();
        let s = estimate_expected_t(&model(3, 0.5), &c, 10, RngState::new(0, 0)).unwrap();
        assert_eq!((s.n_trials, s.n_censored), (10, 10));
        assert!(s.mean.is_nan());
    }

    #[test]
    fn noiseless_mean_is_three() {
        let c = cfg(LossKind::Logistic, 1.0, StopRule::ExtraSample);
        let s = estimate_expected_t(&model(4, 0.0), &c, 20, RngState::new(1, 0)).unwrap();
        assert_eq!((s.mean, s.stderr, s.n_censored), (3.0, 0.0, 0));
        let m = model(4, 0.0);
        let set = RegimeSet::for_model(LossKind::Logistic, &m, 1.0).unwrap();
        let h = estimate_hitting_time(&Vector::zeros(4), &set, &m, &c, 5, RngState::new(1, 1)).unwrap();
        assert_eq!((h.mean, h.stderr), (3.0, 0.0));
    }

    #[test]
    fn reproducible_and_below_bound() {
        let m = model(10, 0.1);
        let c = cfg(LossKind::Hinge, 0.1, StopRule::ExtraSample);
        let a = estimate_expected_t(&m, &c, 50, RngState::new(5, 0)).unwrap();
        let b = estimate_expected_t(&m, &c, 50, RngState::new(5, 0)).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.n_censored, 0);
        assert!(a.mean <= low_regime_expected_t_bound(LossKind::Hinge, &m, 0.1).unwrap());
    }

    #[test]
    fn hitting_time_near_boundary() {
        let m = model(5, 0.1);
        let set = RegimeSet::for_model(LossKind::Logistic, &m, 0.1).unwrap();
        let c = cfg(LossKind::Logistic, 0.1, StopRule::None);
        let start = Vector::basis(5, 0).scaled(1.0 - 1e-3);
        let h = estimate_hitting_time(&start, &set, &m, &c, 50, RngState::new(2, 0)).unwrap();
        assert!(h.mean >= 1.0 && h.mean < 3.0, "{}", h.mean);
        let v0 = set.drift(start.as_slice(), &m);
        assert!(h.mean <= v0 / set.params.b + 4.0 * h.stderr);
        let inside = Vector::basis(5, 0).scaled(2.0);
        assert!(matches!(
            estimate_hitting_time(&inside, &set, &m, &c, 5, RngState::new(0, 0)),
            Err(Error::TargetSet(_))
        ));
    }

    #[test]
    fn angle_deviation() {
        let noiseless = model(3, 0.0);
        let c = cfg(LossKind::Logistic, 0.5, StopRule::ZeroOverhead);
        let r = estimate_angle_deviation(&noiseless, &c, &Vector::basis(3, 1), 10, RngState::new(0, 0)).unwrap();
        assert_eq!((r.deviation.mean, r.deviation.stderr), (0.0, 0.0));
        let flat = model(1, 0.5);
        assert!(estimate_angle_deviation(&flat, &c, &Vector::basis(1, 0), 10, RngState::new(0, 0)).is_err());
        let m = model(3, 0.5);
        let skew = Vector::new(vec![0.6, 0.8, 0.0]).unwrap();
        assert!(estimate_angle_deviation(&m, &c, &skew, 10, RngState::new(0, 0)).is_err());
        let long = Vector::basis(3, 1).scaled(2.0);
        assert!(estimate_angle_deviation(&m, &c, &long, 10, RngState::new(0, 0)).is_err());
    }

    #[test]
    fn drift_passes_in_low_regime_and_control_fails() {
        for (kind, sigma) in [(LossKind::Logistic, 0.1), (LossKind::Hinge, 0.1), (LossKind::Hinge, 1.2)] {
            let m = model(10, sigma);
            let set = RegimeSet::for_model(kind, &m, 0.1).unwrap();
            assert_eq!(set.regime, Regime::Low);
            let probes = drift_probes(&m, &[-5.0, 0.0, 0.9], 1.0, RngState::new(3, 0));
            let report = check_drift_inequality(&set, &m, &probes, 5000, RngState::new(3, 1)).unwrap();
            assert!(report.iter().all(|p| p.pass), "{kind} {sigma}: {report:?}");

            let frozen = RegimeSet::for_model(kind, &m, 0.0).unwrap();
            let report = check_drift_inequality(&frozen, &m, &probes, 5000, RngState::new(3, 1)).unwrap();
            assert!(report.iter().all(|p| !p.pass && p.estimate == 0.0));
        }
    }

    #[test]
    fn drift_probes_lie_where_requested() {
        let m = GaussianFoldedModel::new(Vector::new(vec![0.3, -1.2, 0.5]).unwrap(), 0.2).unwrap();
        let probes = drift_probes(&m, &[-5.0, 0.0, 0.9], 2.0, RngState::new(1, 0));
        for (p, a) in probes.iter().zip([-5.0, 0.0, 0.9]) {
            assert!((p.dot(m.mu()).unwrap() - a).abs() < 1e-12);
            let (_, perp) = crate::theory::decompose(p.as_slice(), &m);
            assert!((perp - 2.0).abs() < 1e-12);
        }
        let set = RegimeSet::for_model(LossKind::Logistic, &m, 0.1).unwrap();
        let inside = Vector::new(vec![0.0, -2.0, 0.0]).unwrap();
        assert!(check_drift_inequality(&set, &m, &[inside], 10, RngState::new(0, 0)).is_err());
    }

    #[test]
    fn delta_on_low_set() {
        let m = model(5, 0.3);
        assert!(min_termination_probability_on_low_set(&m, 1000, RngState::new(0, 0)).unwrap() >= 0.5);
    }

    #[test]
    fn gate_never_shortens_runs() {
        let m = model(5, 0.3);
        let set = RegimeSet::for_model(LossKind::Logistic, &m, 0.1).unwrap();
        let c = cfg(LossKind::Logistic, 0.1, StopRule::ExtraSample);
        let r = estimate_gated_coupling(&set, &m, &c, 100, RngState::new(4, 0)).unwrap();
        assert_eq!(r.violations, 0);
        assert!(r.gated.mean >= r.plain.mean);
    }
}
