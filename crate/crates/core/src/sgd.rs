//! Constant step-size SGD on folded samples with pluggable stopping rules.
//!
//! Every run starts from `θ₀ = 0` and owns a [`RngState`]. Sub-streams are
//! assigned by role: `child(0)` feeds the update samples, `child(1)` the
//! extra test samples, `child(2)` the held-out validation points and
//! `child(3)` the samples of a continuation.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::losses::{direction_scale, LossKind};
use crate::numerics::{axpy, check_dims, dot, Rng, RngState, Vector};

const UPDATE_STREAM: u64 = 0;
const TEST_STREAM: u64 = 1;
const VALIDATION_STREAM: u64 = 2;
const CONTINUE_STREAM: u64 = 3;

/// A stream of folded samples `ξ`.
pub trait SampleSource {
    fn dim(&self) -> usize;

    /// Writes the next sample into `out` (length `dim()`). Returns `false`
    /// once the source is exhausted; `out` is then unspecified.
    fn next_into(&mut self, rng: &mut Rng, out: &mut [f64]) -> bool;
}

impl<S: SampleSource + ?Sized> SampleSource for &mut S {
    fn dim(&self) -> usize {
        (**self).dim()
    }

    fn next_into(&mut self, rng: &mut Rng, out: &mut [f64]) -> bool {
        (**self).next_into(rng, out)
    }
}

/// Replays a fixed list of samples once, ignoring the generator.
#[derive(Debug, Clone)]
pub struct ReplaySource {
    dim: usize,
    samples: Vec<Vector>,
    next: usize,
}

impl ReplaySource {
    pub fn new(samples: Vec<Vector>) -> Result<Self> {
        let dim = samples.first().map(Vector::dim).ok_or_else(|| invalid("samples", "must be nonempty"))?;
        for s in &samples {
            check_dims(dim, s.dim())?;
        }
        Ok(Self { dim, samples, next: 0 })
    }
}

impl SampleSource for ReplaySource {
    fn dim(&self) -> usize {
        self.dim
    }

    fn next_into(&mut self, _rng: &mut Rng, out: &mut [f64]) -> bool {
        match self.samples.get(self.next) {
            Some(s) => {
                out.copy_from_slice(s.as_slice());
                self.next += 1;
                true
            }
            None => false,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum StopRule {
    /// Stop when an independent test sample has margin `ξ̂ᵀθ ≥ 1`.
    ExtraSample,
    /// Stop when the next training sample has margin `ξᵀθ ≥ 1`; that sample
    /// is not used for an update.
    ZeroOverhead,
    /// Every `period` iterations, score `p` held-out points; stop when the
    /// number classified correctly fails to increase.
    SmallValidation { p: usize, period: usize, strict: bool },
    /// Run to the iteration cap.
    None,
}

impl StopRule {
    /// Small-validation rule with the default period `2p` and strict comparison.
    pub fn small_validation(p: usize) -> Result<Self> {
        Self::small_validation_with(p, 2 * p, true)
    }

    pub fn small_validation_with(p: usize, period: usize, strict: bool) -> Result<Self> {
        if p == 0 {
            return Err(invalid("p", "must be at least 1"));
        }
        if period == 0 {
            return Err(invalid("period", "must be at least 1"));
        }
        Ok(StopRule::SmallValidation { p, period, strict })
    }
}

impl fmt::Display for StopRule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            StopRule::ExtraSample => f.write_str("extra-sample"),
            StopRule::ZeroOverhead => f.write_str("zero-overhead"),
            StopRule::SmallValidation { p, period, strict } => {
                write!(f, "svs-{p}")?;
                if *period != 2 * p {
                    write!(f, "-l{period}")?;
                }
                if !strict {
                    f.write_str("-weak")?;
                }
                Ok(())
            }
            StopRule::None => f.write_str("none"),
        }
    }
}

/// Parses the [`Display`](fmt::Display) form: `extra-sample`,
/// `zero-overhead`, `none`, `svs-<p>[-l<period>][-weak]`.
impl FromStr for StopRule {
    type Err = crate::Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "extra-sample" => return Ok(StopRule::ExtraSample),
            "zero-overhead" => return Ok(StopRule::ZeroOverhead),
            "none" => return Ok(StopRule::None),
            _ => {}
        }
        let bad = || invalid("stop_rule", format!("unrecognised rule `{s}`"));
        let rest = s.strip_prefix("svs-").ok_or_else(bad)?;
        let (rest, strict) = match rest.strip_suffix("-weak") {
            Some(r) => (r, false),
            None => (rest, true),
        };
        let (p, period) = match rest.split_once("-l") {
            Some((p, l)) => (p.parse().map_err(|_| bad())?, Some(l.parse().map_err(|_| bad())?)),
            None => (rest.parse::<usize>().map_err(|_| bad())?, None),
        };
        Self::small_validation_with(p, period.unwrap_or(2 * p), strict)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SgdConfig {
    pub kind: LossKind,
    /// Constant step size. Zero is admitted: it freezes `θ` and serves as a
    /// negative control.
    pub alpha: f64,
    /// Censoring cap on the number of updates.
    pub max_iter: u64,
    pub rule: StopRule,
    pub record_trace: bool,
    /// Direction used for the projection and cosine columns of the trace.
    pub trace_reference: Option<Vector>,
}

impl SgdConfig {
    pub fn new(kind: LossKind, alpha: f64, max_iter: u64, rule: StopRule) -> Result<Self> {
        if !(alpha >= 0.0) || !alpha.is_finite() {
            return Err(invalid("alpha", "must be finite and non-negative"));
        }
        if max_iter == 0 {
            return Err(invalid("max_iter", "must be at least 1"));
        }
        Ok(Self {
            kind,
            alpha,
            max_iter,
            rule,
            record_trace: false,
            trace_reference: None,
        })
    }

    pub fn with_rule(&self, rule: StopRule) -> Self {
        Self { rule, ..self.clone() }
    }

    /// Enables the trace; `reference` is typically the class mean `μ`.
    pub fn with_trace(mut self, reference: Option<Vector>) -> Self {
        self.record_trace = true;
        self.trace_reference = reference;
        self
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum StopReason {
    /// The stopping rule fired.
    Fired,
    /// The iteration cap was reached.
    MaxIter,
    /// The sample source ran dry.
    Exhausted,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TracePoint {
    pub iteration: u64,
    /// `rᵀθ` for the trace reference `r`.
    pub projection: Option<f64>,
    /// `rᵀθ / (‖r‖‖θ‖)`, a monotone proxy for accuracy under the Gaussian model.
    pub cosine: Option<f64>,
    pub norm: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunResult {
    pub theta_final: Vector,
    /// Number of SGD updates performed; the stopping index `T` when the rule fired.
    pub iterations: u64,
    /// The rule did not fire (cap reached or source exhausted).
    pub censored: bool,
    pub stop_reason: StopReason,
    /// Samples drawn from the source, including test and validation draws.
    pub samples_consumed: u64,
    /// Inner products spent on the stopping rule beyond the updates themselves.
    pub overhead: u64,
    pub trace: Option<Vec<TracePoint>>,
}

/// `θ + α·c(ξᵀθ)·ξ`.
pub fn sgd_step(theta: &Vector, xi: &Vector, kind: LossKind, alpha: f64) -> Result<Vector> {
    check_dims(theta.dim(), xi.dim())?;
    let mut out = theta.clone();
    step_in_place(out.as_mut_slice(), xi.as_slice(), kind, alpha);
    Ok(out)
}

#[inline]
fn step_in_place(theta: &mut [f64], xi: &[f64], kind: LossKind, alpha: f64) {
    let margin = dot(xi, theta);
    step_with_margin(theta, xi, kind, alpha, margin);
}

#[inline]
fn step_with_margin(theta: &mut [f64], xi: &[f64], kind: LossKind, alpha: f64, margin: f64) {
    let c = alpha * direction_scale(kind, margin);
    if c != 0.0 {
        axpy(c, xi, theta);
    }
}

struct Tracer {
    every: u64,
    reference: Option<(Vec<f64>, f64)>,
    points: Vec<TracePoint>,
}

impl Tracer {
    fn new(config: &SgdConfig) -> Option<Self> {
        config.record_trace.then(|| Self {
            every: config.max_iter.div_ceil(1000).max(1),
            reference: config.trace_reference.as_ref().map(|r| (r.as_slice().to_vec(), r.norm())),
            points: Vec::new(),
        })
    }

    fn record(&mut self, k: u64, theta: &[f64]) {
        let norm = dot(theta, theta).sqrt();
        let (projection, cosine) = match &self.reference {
            Some((r, rn)) => {
                let p = dot(r, theta);
                let cos = if norm > 0.0 { p / (rn * norm) } else { 0.0 };
                (Some(p), Some(cos))
            }
            None => (None, None),
        };
        self.points.push(TracePoint {
            iteration: k,
            projection,
            cosine,
            norm,
        });
    }

    fn tick(&mut self, k: u64, theta: &[f64]) {
        if k % self.every == 0 {
            self.record(k, theta);
        }
    }

    fn finish(mut self, k: u64, theta: &[f64]) -> Vec<TracePoint> {
        if self.points.last().map(|p| p.iteration) != Some(k) {
            self.record(k, theta);
        }
        self.points
    }
}

struct Outcome {
    theta: Vec<f64>,
    iterations: u64,
    reason: StopReason,
    consumed: u64,
    overhead: u64,
    tracer: Option<Tracer>,
}

impl Outcome {
    fn into_result(self) -> RunResult {
        let trace = self.tracer.map(|t| t.finish(self.iterations, &self.theta));
        RunResult {
            theta_final: Vector::new(self.theta).expect("iterates stay finite"),
            iterations: self.iterations,
            censored: self.reason != StopReason::Fired,
            stop_reason: self.reason,
            samples_consumed: self.consumed,
            overhead: self.overhead,
            trace,
        }
    }
}

fn rule_mismatch(expected: &str, found: StopRule) -> crate::Error {
    invalid("rule", format!("expected {expected}, config has {found}"))
}

/// Dispatches on `config.rule`.
pub fn run<S: SampleSource + ?Sized>(source: &mut S, config: &SgdConfig, rng: RngState) -> Result<RunResult> {
    match config.rule {
        StopRule::ExtraSample => run_extra_sample(source, config, rng),
        StopRule::ZeroOverhead => run_zero_overhead(source, config, rng),
        StopRule::SmallValidation { .. } => run_svs(source, config, rng),
        StopRule::None => run_plain(source, config, rng),
    }
}

/// SGD with an independent test sample per iteration:
/// draw `ξ̂₀`; while `ξ̂ₖᵀθₖ < 1`: draw `ξₖ₊₁`, update, draw `ξ̂ₖ₊₁`.
/// Consumes `2T + 1` samples.
pub fn run_extra_sample<S: SampleSource + ?Sized>(source: &mut S, config: &SgdConfig, rng: RngState) -> Result<RunResult> {
    if config.rule != StopRule::ExtraSample {
        return Err(rule_mismatch("extra-sample", config.rule));
    }
    Ok(extra_sample_core(source, config, rng, &mut |_: &[f64]| true).into_result())
}

/// [`run_extra_sample`] that stops only when the test fires and `gate(θₖ)`
/// holds. With the same `rng` and source, its stopping index is never below
/// the ungated one: both runs see identical samples up to the ungated stop.
pub fn run_extra_sample_gated<S, G>(source: &mut S, config: &SgdConfig, rng: RngState, mut gate: G) -> Result<RunResult>
where
    S: SampleSource + ?Sized,
    G: FnMut(&[f64]) -> bool,
{
    if config.rule != StopRule::ExtraSample {
        return Err(rule_mismatch("extra-sample", config.rule));
    }
    Ok(extra_sample_core(source, config, rng, &mut gate).into_result())
}

fn extra_sample_core<S: SampleSource + ?Sized>(
    source: &mut S,
    config: &SgdConfig,
    rng: RngState,
    gate: &mut dyn FnMut(&[f64]) -> bool,
) -> Outcome {
    let d = source.dim();
    let mut upd = rng.child(UPDATE_STREAM).rng();
    let mut tst = rng.child(TEST_STREAM).rng();
    let mut theta = vec![0.0; d];
    let mut xi = vec![0.0; d];
    let mut xhat = vec![0.0; d];
    let mut tracer = Tracer::new(config);
    let mut k = 0;
    let mut consumed = 0;
    let mut overhead = 0;
    let reason = loop {
        if let Some(t) = tracer.as_mut() {
            t.tick(k, &theta);
        }
        if !source.next_into(&mut tst, &mut xhat) {
            break StopReason::Exhausted;
        }
        consumed += 1;
        overhead += 1;
        if dot(&xhat, &theta) >= 1.0 && gate(&theta) {
            break StopReason::Fired;
        }
        if k == config.max_iter {
            break StopReason::MaxIter;
        }
        if !source.next_into(&mut upd, &mut xi) {
            break StopReason::Exhausted;
        }
        consumed += 1;
        step_in_place(&mut theta, &xi, config.kind, config.alpha);
        k += 1;
    };
    Outcome {
        theta,
        iterations: k,
        reason,
        consumed,
        overhead,
        tracer,
    }
}

/// SGD that stops at the first training sample with `ξₖ₊₁ᵀθₖ ≥ 1` and
/// returns `θₖ`. The terminating sample is drawn but never applied, so a run
/// stopping after `T` updates consumes `T + 1` samples (`max_iter` when
/// censored).
pub fn run_zero_overhead<S: SampleSource + ?Sized>(source: &mut S, config: &SgdConfig, rng: RngState) -> Result<RunResult> {
    if config.rule != StopRule::ZeroOverhead {
        return Err(rule_mismatch("zero-overhead", config.rule));
    }
    let d = source.dim();
    let mut upd = rng.child(UPDATE_STREAM).rng();
    let mut theta = vec![0.0; d];
    let mut xi = vec![0.0; d];
    let mut tracer = Tracer::new(config);
    let mut k = 0;
    let mut consumed = 0;
    let reason = loop {
        if let Some(t) = tracer.as_mut() {
            t.tick(k, &theta);
        }
        if k == config.max_iter {
            break StopReason::MaxIter;
        }
        if !source.next_into(&mut upd, &mut xi) {
            break StopReason::Exhausted;
        }
        consumed += 1;
        let margin = dot(&xi, &theta);
        if margin >= 1.0 {
            break StopReason::Fired;
        }
        step_with_margin(&mut theta, &xi, config.kind, config.alpha, margin);
        k += 1;
    };
    Ok(Outcome {
        theta,
        iterations: k,
        reason,
        consumed,
        overhead: 0,
        tracer,
    }
    .into_result())
}

fn count_correct(validation: &[f64], d: usize, theta: &[f64]) -> usize {
    validation.chunks_exact(d).filter(|v| dot(v, theta) > 0.0).count()
}

/// Small-validation-set baseline. `p` points are drawn first; the count of
/// positive validation margins is taken at `θ₀` and then every `period`
/// updates, stopping at the first check that does not beat the previous
/// one (strictly, unless the rule is weak). At `θ₀ = 0` every margin is 0,
/// so the baseline count is 0; with a strict rule the count must climb at
/// every continuing check, which caps the run at `(p + 1)·period` updates.
pub fn run_svs<S: SampleSource + ?Sized>(source: &mut S, config: &SgdConfig, rng: RngState) -> Result<RunResult> {
    let StopRule::SmallValidation { p, period, strict } = config.rule else {
        return Err(rule_mismatch("svs", config.rule));
    };
    let d = source.dim();
    let mut upd = rng.child(UPDATE_STREAM).rng();
    let mut val = rng.child(VALIDATION_STREAM).rng();
    let mut theta = vec![0.0; d];
    let mut xi = vec![0.0; d];
    let mut tracer = Tracer::new(config);
    let mut validation = vec![0.0; p * d];
    let mut consumed = 0;
    let mut drawn_all = true;
    for chunk in validation.chunks_exact_mut(d) {
        if !source.next_into(&mut val, chunk) {
            drawn_all = false;
            break;
        }
        consumed += 1;
    }
    if !drawn_all {
        return Ok(Outcome {
            theta,
            iterations: 0,
            reason: StopReason::Exhausted,
            consumed,
            overhead: 0,
            tracer,
        }
        .into_result());
    }
    let period = period as u64;
    let mut previous = count_correct(&validation, d, &theta);
    let mut overhead = p as u64;
    let mut k = 0;
    let reason = loop {
        if let Some(t) = tracer.as_mut() {
            t.tick(k, &theta);
        }
        if k == config.max_iter {
            break StopReason::MaxIter;
        }
        if !source.next_into(&mut upd, &mut xi) {
            break StopReason::Exhausted;
        }
        consumed += 1;
        step_in_place(&mut theta, &xi, config.kind, config.alpha);
        k += 1;
        if k % period == 0 {
            let current = count_correct(&validation, d, &theta);
            overhead += p as u64;
            let stop = if strict { current <= previous } else { current < previous };
            if stop {
                break StopReason::Fired;
            }
            previous = current;
        }
    };
    Ok(Outcome {
        theta,
        iterations: k,
        reason,
        consumed,
        overhead,
        tracer,
    }
    .into_result())
}

/// Plain SGD for `max_iter` updates.
pub fn run_plain<S: SampleSource + ?Sized>(source: &mut S, config: &SgdConfig, rng: RngState) -> Result<RunResult> {
    let d = source.dim();
    let mut upd = rng.child(UPDATE_STREAM).rng();
    let mut theta = vec![0.0; d];
    let mut xi = vec![0.0; d];
    let mut tracer = Tracer::new(config);
    let mut k = 0;
    let reason = loop {
        if let Some(t) = tracer.as_mut() {
            t.tick(k, &theta);
        }
        if k == config.max_iter {
            break StopReason::MaxIter;
        }
        if !source.next_into(&mut upd, &mut xi) {
            break StopReason::Exhausted;
        }
        step_in_place(&mut theta, &xi, config.kind, config.alpha);
        k += 1;
    };
    Ok(Outcome {
        theta,
        iterations: k,
        reason,
        consumed: k,
        overhead: 0,
        tracer,
    }
    .into_result())
}

/// Resumes plain SGD from `result.theta_final` for `extra_iters` updates,
/// drawing from `rng.child(3)`. Counters accumulate; the stop reason is kept
/// unless the source runs dry.
pub fn continue_run<S: SampleSource + ?Sized>(
    result: &RunResult,
    extra_iters: u64,
    source: &mut S,
    config: &SgdConfig,
    rng: RngState,
) -> Result<RunResult> {
    check_dims(source.dim(), result.theta_final.dim())?;
    let mut out = result.clone();
    let mut upd = rng.child(CONTINUE_STREAM).rng();
    let mut xi = vec![0.0; source.dim()];
    let theta = out.theta_final.as_mut_slice();
    for _ in 0..extra_iters {
        if !source.next_into(&mut upd, &mut xi) {
            out.stop_reason = StopReason::Exhausted;
            out.censored = true;
            break;
        }
        step_in_place(theta, &xi, config.kind, config.alpha);
        out.iterations += 1;
        out.samples_consumed += 1;
    }
    if let Some(trace) = out.trace.as_mut() {
        let theta = out.theta_final.as_slice();
        let norm = dot(theta, theta).sqrt();
        let (projection, cosine) = match &config.trace_reference {
            Some(r) => {
                let p = dot(r.as_slice(), theta);
                (Some(p), Some(if norm > 0.0 { p / (r.norm() * norm) } else { 0.0 }))
            }
            None => (None, None),
        };
        trace.push(TracePoint {
            iteration: out.iterations,
            projection,
            cosine,
            norm,
        });
    }
    Ok(out)
}

/// Result of [`run_until`].
#[derive(Debug, Clone, PartialEq)]
pub struct HitResult {
    pub theta: Vector,
    /// First `k > 0` with `hit(θₖ)`, or the number of updates done when censored.
    pub iterations: u64,
    pub censored: bool,
}

/// Plain SGD from `theta0` until the first `k > 0` with `hit(θₖ)`.
pub fn run_until<S, H>(
    source: &mut S,
    kind: LossKind,
    alpha: f64,
    theta0: &Vector,
    max_iter: u64,
    rng: RngState,
    mut hit: H,
) -> Result<HitResult>
where
    S: SampleSource + ?Sized,
    H: FnMut(&[f64]) -> bool,
{
    check_dims(source.dim(), theta0.dim())?;
    let mut upd = rng.child(UPDATE_STREAM).rng();
    let mut theta = theta0.as_slice().to_vec();
    let mut xi = vec![0.0; theta.len()];
    let mut k = 0;
    let mut censored = true;
    while k < max_iter {
        if !source.next_into(&mut upd, &mut xi) {
            break;
        }
        step_in_place(&mut theta, &xi, kind, alpha);
        k += 1;
        if hit(&theta) {
            censored = false;
            break;
        }
    }
    Ok(HitResult {
        theta: Vector::new(theta).expect("iterates stay finite"),
        iterations: k,
        censored,
    })
}
