//! Config-driven experiment commands. Each command is a pure function of
//! its config (seed included) and returns the bytes of its artifact.

mod config;

use std::io::ErrorKind;
use std::path::Path;
use std::sync::Arc;

use serde::Serialize;

pub use config::{
    CompareConfig, DataChoice, DriftCase, ExperimentConfig, Generator, RealDataConfig, RealDataset, Stopper,
    SweepConfig, SyntheticConfig, VerifyConfig, DATA_DIR_ENV,
};
use config::config_error;

use crate::data::{
    accuracy_on_set, estimate_centering, fold, load_cifar10_batch, load_csv, load_mnist, make_binary_task,
    DataOrigin, Dataset, EpochStream, FoldedStream, LabeledPoint, LabeledSource, MnistSplit,
};
use crate::error::{Error, Result};
use crate::losses::LossKind;
use crate::numerics::{dot, std_normal_cdf, RngState, Vector};
use crate::sgd::{continue_run, run, RunResult, SgdConfig, StopReason, StopRule};
use crate::theory::{
    angle_bound, low_regime_expected_t_bound, mixture_accuracy, regime_of, GaussianFoldedModel, Regime, RegimeSet,
};
use crate::verify::{
    check_drift_inequality, drift_probes, estimate_angle_deviation, estimate_expected_t, estimate_gated_coupling,
    estimate_hitting_time, min_termination_probability_on_low_set, run_trials,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    SweepSigma,
    CompareStoppers,
    VerifyBounds,
    RunReal,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::SweepSigma => "sweep-sigma",
            Command::CompareStoppers => "compare-stoppers",
            Command::VerifyBounds => "verify-bounds",
            Command::RunReal => "run-real",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Status {
    Ok,
    /// Input data files are absent; the artifact holds only headers.
    DataMissing,
    /// At least one verification check failed.
    ChecksFailed,
}

impl Status {
    pub fn exit_code(self) -> i32 {
        match self {
            Status::Ok => 0,
            Status::DataMissing => 3,
            Status::ChecksFailed => 4,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CommandOutput {
    pub bytes: Vec<u8>,
    pub status: Status,
}

/// Process exit code for a library error: 2 for bad configuration, 1 otherwise.
pub fn error_exit_code(err: &Error) -> i32 {
    match err {
        Error::Config(_) | Error::InvalidParameter { .. } => 2,
        _ => 1,
    }
}

/// Applies command-line overrides. `trials` sets `verify.trials` for
/// verify-bounds and `trials` for the other commands.
pub fn apply_overrides(config: &mut ExperimentConfig, command: Command, seed: Option<u64>, trials: Option<usize>) {
    if let Some(s) = seed {
        config.seed = s;
    }
    if let Some(t) = trials {
        match command {
            Command::VerifyBounds => config.verify.trials = t,
            _ => config.trials = t,
        }
    }
}

pub fn execute(command: Command, config: &ExperimentConfig) -> Result<CommandOutput> {
    config.validate()?;
    match command {
        Command::SweepSigma => sweep_sigma(config),
        Command::CompareStoppers => compare_stoppers(config),
        Command::VerifyBounds => verify_bounds(config),
        Command::RunReal => run_real(config),
    }
}

fn provenance(config: &ExperimentConfig) -> String {
    format!("# config={} seed={}\n", config.hash(), config.seed)
}

fn csv_bytes<R: Serialize>(config: &ExperimentConfig, header: &[&str], rows: &[R]) -> Result<Vec<u8>> {
    let mut out = provenance(config).into_bytes();
    {
        let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(&mut out);
        let io = |e: csv::Error| Error::Io(std::io::Error::other(e));
        w.write_record(header).map_err(io)?;
        for r in rows {
            w.serialize(r).map_err(io)?;
        }
        w.flush()?;
    }
    Ok(out)
}

fn stop_label(reason: StopReason) -> &'static str {
    match reason {
        StopReason::Fired => "fired",
        StopReason::MaxIter => "max-iter",
        StopReason::Exhausted => "exhausted",
    }
}

pub const SWEEP_HEADER: [&str; 11] = [
    "loss",
    "sigma",
    "trial",
    "iterations",
    "censored",
    "stop_reason",
    "alpha",
    "sigma2_tilde",
    "accuracy",
    "optimal_accuracy",
    "ratio",
];

#[derive(Debug, Serialize)]
struct SweepRow {
    loss: LossKind,
    sigma: f64,
    trial: usize,
    iterations: u64,
    censored: bool,
    stop_reason: &'static str,
    alpha: f64,
    sigma2_tilde: f64,
    accuracy: f64,
    optimal_accuracy: f64,
    ratio: f64,
}

/// Accuracy-versus-noise sweep on the Gaussian mixture: per `(loss, σ)` cell
/// and trial, centre with the configured number of samples, scale the
/// step, run the sweep rule and score `θ_T` exactly against the mixture.
fn sweep_sigma(config: &ExperimentConfig) -> Result<CommandOutput> {
    if config.synthetic.generator != Generator::Gaussian {
        return Err(config_error("sweep-sigma needs the gaussian generator"));
    }
    let Stopper::Rule(rule) = Stopper::parse(&config.sweep.rule)? else {
        return Err(config_error("sweep.rule cannot be a continuation"));
    };
    let (mu0, mu1) = config.synthetic.means()?;
    let separation = mu1.sub(&mu0)?.norm();
    if separation == 0.0 {
        return Err(config_error("synthetic class means coincide"));
    }
    let base = RngState::new(config.seed, 0);
    let mut rows = Vec::new();
    for (li, &kind) in config.losses.iter().enumerate() {
        for (si, &sigma) in config.sweep.sigmas.iter().enumerate() {
            let mixture = config.synthetic.gaussian(sigma)?;
            let optimal = std_normal_cdf(0.5 * separation / sigma);
            let cell = base.child(li as u64).child(si as u64);
            let trials = run_trials(config.trials, cell, |r| {
                let mut gen = mixture.clone();
                let centering = estimate_centering(&mut gen, &mut r.child(0).rng(), config.centering_samples)?;
                let alpha = config.step_size(centering.sigma2_tilde)?;
                let sgd = SgdConfig::new(kind, alpha, config.max_iter, rule)?;
                let mut stream = FoldedStream::new(mixture.clone(), centering.offset.clone())?;
                let res = run(&mut stream, &sgd, r.child(1))?;
                let accuracy = mixture_accuracy(
                    res.theta_final.as_slice(),
                    centering.offset.as_slice(),
                    mu0.as_slice(),
                    mu1.as_slice(),
                    sigma,
                );
                Ok((res, alpha, centering.sigma2_tilde, accuracy))
            })?;
            for (trial, (res, alpha, s2, accuracy)) in trials.into_iter().enumerate() {
                rows.push(SweepRow {
                    loss: kind,
                    sigma,
                    trial,
                    iterations: res.iterations,
                    censored: res.censored,
                    stop_reason: stop_label(res.stop_reason),
                    alpha,
                    sigma2_tilde: s2,
                    accuracy,
                    optimal_accuracy: optimal,
                    ratio: accuracy / optimal,
                });
            }
        }
    }
    Ok(CommandOutput {
        bytes: csv_bytes(config, &SWEEP_HEADER, &rows)?,
        status: Status::Ok,
    })
}

pub const COMPARE_HEADER: [&str; 13] = [
    "data",
    "loss",
    "stopper",
    "trial",
    "iterations",
    "samples_consumed",
    "overhead",
    "censored",
    "stop_reason",
    "alpha",
    "sigma2_tilde",
    "accuracy",
    "baseline_accuracy",
];

#[derive(Debug, Serialize)]
struct CompareRow {
    data: &'static str,
    loss: LossKind,
    stopper: String,
    trial: usize,
    iterations: u64,
    samples_consumed: u64,
    overhead: u64,
    censored: bool,
    stop_reason: &'static str,
    alpha: f64,
    sigma2_tilde: f64,
    accuracy: f64,
    baseline_accuracy: Option<f64>,
}

/// Scores `θ` for a run centred at `offset`.
trait Scorer: Sync {
    fn accuracy(&self, theta: &Vector, offset: &Vector) -> Result<f64>;
}

struct ExactMixture {
    mu0: Vector,
    mu1: Vector,
    sigma: f64,
}

impl Scorer for ExactMixture {
    fn accuracy(&self, theta: &Vector, offset: &Vector) -> Result<f64> {
        Ok(mixture_accuracy(
            theta.as_slice(),
            offset.as_slice(),
            self.mu0.as_slice(),
            self.mu1.as_slice(),
            self.sigma,
        ))
    }
}

/// A synthetic validation set regenerated from a fixed stream on every call,
/// so it never has to be held in memory.
struct StreamedValidation<L> {
    source: L,
    n: usize,
    rng: RngState,
}

impl<L: LabeledSource + Clone + Sync> Scorer for StreamedValidation<L> {
    fn accuracy(&self, theta: &Vector, offset: &Vector) -> Result<f64> {
        let mut src = self.source.clone();
        let mut r = self.rng.rng();
        let mut zeta = vec![0.0; src.dim()];
        let mut correct = 0usize;
        for _ in 0..self.n {
            let y = src.next_labeled(&mut r, &mut zeta).ok_or_else(|| config_error("validation source ran dry"))?;
            let s = if y == 1 { 1.0 } else { -1.0 };
            let m: f64 = zeta.iter().zip(offset.as_slice()).zip(theta.as_slice()).map(|((z, o), t)| (z - o) * t).sum();
            if s * m > 0.0 {
                correct += 1;
            }
        }
        Ok(correct as f64 / self.n as f64)
    }
}

struct HeldOut {
    points: Vec<LabeledPoint>,
}

impl Scorer for HeldOut {
    fn accuracy(&self, theta: &Vector, offset: &Vector) -> Result<f64> {
        let folded = self.points.iter().map(|p| fold(p, offset)).collect::<Result<Vec<_>>>()?;
        accuracy_on_set(theta, &folded)
    }
}

/// Runs every stopper on every trial. Within a trial all stoppers share the
/// centering draw and the run stream, so they differ only in when they stop.
fn compare_rows<L, F>(
    config: &ExperimentConfig,
    data: &'static str,
    make_source: F,
    scorer: &dyn Scorer,
    baseline: Option<f64>,
) -> Result<Vec<CompareRow>>
where
    L: LabeledSource,
    F: Fn() -> L + Sync,
{
    let stoppers = config
        .compare
        .stoppers
        .iter()
        .map(|s| Ok((s.clone(), Stopper::parse(s)?)))
        .collect::<Result<Vec<_>>>()?;
    let base = RngState::new(config.seed, 1);
    let mut rows = Vec::new();
    for (li, &kind) in config.losses.iter().enumerate() {
        let trials = run_trials(config.trials, base.child(li as u64), |r| {
            let mut src = make_source();
            let centering = estimate_centering(&mut src, &mut r.child(0).rng(), config.centering_samples)?;
            let alpha = config.step_size(centering.sigma2_tilde)?;
            let sgd = SgdConfig::new(kind, alpha, config.max_iter, StopRule::ZeroOverhead)?;
            let offset = &centering.offset;
            let mut cache: Vec<(StopRule, RunResult)> = Vec::new();
            let mut out = Vec::with_capacity(stoppers.len());
            for (label, stopper) in &stoppers {
                let rule = stopper.base();
                let cfg = sgd.with_rule(rule);
                let base_run = match cache.iter().find(|(r, _)| *r == rule) {
                    Some((_, res)) => res.clone(),
                    None => {
                        let res = run(&mut FoldedStream::new(make_source(), offset.clone())?, &cfg, r.child(1))?;
                        cache.push((rule, res.clone()));
                        res
                    }
                };
                let res = match stopper {
                    Stopper::Rule(_) => base_run,
                    Stopper::Continue(_) => {
                        let extra = (config.compare.continue_factor * base_run.iterations as f64).floor() as u64;
                        let mut stream = FoldedStream::new(make_source(), offset.clone())?;
                        continue_run(&base_run, extra, &mut stream, &cfg, r.child(2))?
                    }
                };
                let accuracy = scorer.accuracy(&res.theta_final, offset)?;
                out.push((label.clone(), res, accuracy));
            }
            Ok((alpha, centering.sigma2_tilde, out))
        })?;
        for (trial, (alpha, s2, runs)) in trials.into_iter().enumerate() {
            for (stopper, res, accuracy) in runs {
                rows.push(CompareRow {
                    data,
                    loss: kind,
                    stopper,
                    trial,
                    iterations: res.iterations,
                    samples_consumed: res.samples_consumed,
                    overhead: res.overhead,
                    censored: res.censored,
                    stop_reason: stop_label(res.stop_reason),
                    alpha,
                    sigma2_tilde: s2,
                    accuracy,
                    baseline_accuracy: baseline,
                });
            }
        }
    }
    Ok(rows)
}

fn compare_synthetic(config: &ExperimentConfig) -> Result<Vec<CompareRow>> {
    let validation_rng = RngState::new(config.seed, 2);
    match config.synthetic.generator {
        Generator::Gaussian => {
            let mixture = config.synthetic.gaussian(config.synthetic.sigma)?;
            let scorer = ExactMixture {
                mu0: mixture.mu0().clone(),
                mu1: mixture.mu1().clone(),
                sigma: mixture.sigma(),
            };
            compare_rows(config, "synthetic-gaussian", || mixture.clone(), &scorer, None)
        }
        Generator::StudentT2 => {
            let mixture = config.synthetic.student_t2()?;
            let scorer = StreamedValidation {
                source: mixture.clone(),
                n: config.validation_size,
                rng: validation_rng,
            };
            compare_rows(config, "synthetic-t2", || mixture.clone(), &scorer, None)
        }
    }
}

fn compare_stoppers(config: &ExperimentConfig) -> Result<CommandOutput> {
    match config.compare.data {
        DataChoice::Synthetic => Ok(CommandOutput {
            bytes: csv_bytes(config, &COMPARE_HEADER, &compare_synthetic(config)?)?,
            status: Status::Ok,
        }),
        DataChoice::Real => run_real(config),
    }
}

/// Train and test splits of a binary real-data task.
struct RealTask {
    train: Arc<Dataset>,
    test: Vec<LabeledPoint>,
    baseline: f64,
    label: &'static str,
}

fn read_file(path: &Path) -> Result<Vec<u8>> {
    Ok(std::fs::read(path)?)
}

fn load_real(config: &RealDataConfig) -> Result<RealTask> {
    let path = config.resolved_path();
    let (a, b) = config.classes();
    let (train, test, origin, label) = match config.dataset {
        RealDataset::Mnist => (
            load_mnist(&path, MnistSplit::Train, config.scale_pixels)?,
            load_mnist(&path, MnistSplit::Test, config.scale_pixels)?,
            DataOrigin::Mnist,
            "mnist",
        ),
        RealDataset::Cifar10 => {
            let mut train = Vec::new();
            for i in 1..=5 {
                train.extend(load_cifar10_batch(&read_file(&path.join(format!("data_batch_{i}.bin")))?, config.scale_pixels)?);
            }
            let test = load_cifar10_batch(&read_file(&path.join("test_batch.bin"))?, config.scale_pixels)?;
            (train, test, DataOrigin::Cifar10, "cifar10")
        }
        RealDataset::Csv => {
            let test_path = config
                .test_path
                .as_ref()
                .ok_or_else(|| config_error("real.test_path is required for csv data"))?;
            let train = load_csv(read_file(&path)?.as_slice())?;
            let test = load_csv(read_file(test_path)?.as_slice())?;
            (train, test, DataOrigin::Csv, "csv")
        }
    };
    let train = make_binary_task(&train, a, b, origin)?;
    let test = make_binary_task(&test, a, b, origin)?;
    if train.dim() != test.dim() {
        return Err(Error::DimensionMismatch {
            expected: train.dim(),
            found: test.dim(),
        });
    }
    Ok(RealTask {
        baseline: test.majority_rate(),
        test: test.points().to_vec(),
        train: Arc::new(train),
        label,
    })
}

/// Real-data comparison. Absent input files yield a header-only CSV and
/// [`Status::DataMissing`]; malformed files are errors.
fn run_real(config: &ExperimentConfig) -> Result<CommandOutput> {
    let task = match load_real(&config.real) {
        Ok(t) => t,
        Err(Error::Io(e)) if e.kind() == ErrorKind::NotFound => {
            return Ok(CommandOutput {
                bytes: csv_bytes::<CompareRow>(config, &COMPARE_HEADER, &[])?,
                status: Status::DataMissing,
            });
        }
        Err(e) => return Err(e),
    };
    let scorer = HeldOut { points: task.test };
    let train = task.train;
    let max_epochs = config.real.max_epochs;
    let rows = compare_rows(
        config,
        task.label,
        || EpochStream::new(train.clone(), max_epochs),
        &scorer,
        Some(task.baseline),
    )?;
    Ok(CommandOutput {
        bytes: csv_bytes(config, &COMPARE_HEADER, &rows)?,
        status: Status::Ok,
    })
}

/// One line of the verification report.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CheckRecord {
    pub check: String,
    pub value: f64,
    pub bound: f64,
    pub stderr: Option<f64>,
    pub pass: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

impl CheckRecord {
    fn new(check: String, value: f64, bound: f64, stderr: Option<f64>, pass: bool) -> Self {
        Self {
            check,
            value,
            bound,
            stderr,
            pass,
            note: None,
        }
    }

    fn failed(check: String, err: &Error) -> Self {
        Self {
            check,
            value: f64::NAN,
            bound: f64::NAN,
            stderr: None,
            pass: false,
            note: Some(err.to_string()),
        }
    }
}

#[derive(Debug, Serialize)]
struct VerifyReport<'a> {
    config_hash: String,
    seed: u64,
    config: &'a ExperimentConfig,
    checks: Vec<CheckRecord>,
}

fn push_checks(out: &mut Vec<CheckRecord>, name: String, result: Result<Vec<CheckRecord>>) {
    match result {
        Ok(records) => out.extend(records),
        Err(e) => out.push(CheckRecord::failed(name, &e)),
    }
}

/// Runs the verification suite for each configured loss.
pub fn verification_checks(config: &ExperimentConfig) -> Result<Vec<CheckRecord>> {
    let v = &config.verify;
    let rule: StopRule = v.rule.parse()?;
    let base = RngState::new(config.seed, 3);
    let mut checks = Vec::new();
    for (li, &kind) in config.losses.iter().enumerate() {
        let rng = base.child(li as u64);
        let model = GaussianFoldedModel::axis_aligned(v.d, v.mu_norm, v.sigma)?;
        let sgd = SgdConfig::new(kind, v.alpha, config.max_iter, rule)?;

        let name = format!("expected-T/{kind}");
        push_checks(&mut checks, name.clone(), (|| {
            let bound = low_regime_expected_t_bound(kind, &model, v.alpha)?;
            let s = estimate_expected_t(&model, &sgd, v.trials, rng.child(0))?;
            Ok(vec![
                CheckRecord::new(name.clone(), s.mean, bound, Some(s.stderr), s.n_censored == 0 && s.mean <= bound),
                CheckRecord::new(format!("censored/{kind}"), s.n_censored as f64, 0.0, None, s.n_censored == 0),
            ])
        })());

        let name = format!("angle/{kind}");
        push_checks(&mut checks, name.clone(), (|| {
            let m = GaussianFoldedModel::axis_aligned(v.angle_d, v.mu_norm, v.angle_sigma)?;
            let c = SgdConfig::new(kind, v.angle_alpha, config.max_iter, rule)?;
            let r = estimate_angle_deviation(&m, &c, &Vector::basis(v.angle_d, 1), v.trials, rng.child(1))?;
            let bound = angle_bound(&m, v.angle_alpha, r.stopping_time.mean);
            let pass = r.deviation.n_censored == 0 && r.slack.mean <= 3.0 * r.slack.stderr;
            Ok(vec![CheckRecord::new(name.clone(), r.deviation.mean, bound, Some(r.slack.stderr), pass)])
        })());

        for (ci, case) in v.drift_cases.iter().enumerate().filter(|(_, c)| c.loss == kind) {
            let tag = format!("{kind}/sigma-ratio={}", case.sigma_ratio);
            push_checks(&mut checks, format!("drift/{tag}"), (|| {
                let m = GaussianFoldedModel::axis_aligned(v.d, v.mu_norm, case.sigma_ratio * v.mu_norm)?;
                let probes = drift_probes(&m, &v.drift_projections, v.drift_perp_norm, rng.child(2).child(ci as u64));
                let set = RegimeSet::for_model(kind, &m, v.alpha)?;
                let mc = rng.child(3).child(ci as u64);
                let mut out: Vec<CheckRecord> = check_drift_inequality(&set, &m, &probes, v.n_mc, mc)?
                    .into_iter()
                    .map(|p| {
                        let proj = dot(p.theta.as_slice(), m.mu().as_slice());
                        CheckRecord::new(format!("drift/{tag}/mu-theta={proj:.3}"), p.estimate, -p.b, Some(p.stderr), p.pass)
                    })
                    .collect();
                let frozen = RegimeSet::for_model(kind, &m, 0.0)?;
                if frozen.regime == Regime::Low {
                    let control = check_drift_inequality(&frozen, &m, &probes, v.n_mc, mc)?;
                    let worst = control.iter().map(|p| p.estimate).fold(f64::NEG_INFINITY, f64::max);
                    out.push(CheckRecord {
                        note: Some("alpha = 0; passes when every probe fails".into()),
                        ..CheckRecord::new(format!("drift-control/{tag}"), worst, 0.0, None, control.iter().all(|p| !p.pass))
                    });
                }
                Ok(out)
            })());
        }

        let name = format!("hitting-time/{kind}");
        push_checks(&mut checks, name.clone(), (|| {
            let set = RegimeSet::for_model(kind, &model, v.alpha)?;
            if set.regime != Regime::Low {
                return Err(Error::RegimeMismatch {
                    expected: Regime::Low,
                    found: set.regime,
                });
            }
            let theta0 = Vector::zeros(v.d);
            let bound = set.drift(theta0.as_slice(), &model) / set.params.b;
            let c = sgd.with_rule(StopRule::None);
            let s = estimate_hitting_time(&theta0, &set, &model, &c, v.hitting_trials, rng.child(4))?;
            Ok(vec![CheckRecord::new(name.clone(), s.mean, bound, Some(s.stderr), s.n_censored == 0 && s.mean <= bound)])
        })());

        let name = format!("delta/{kind}");
        push_checks(&mut checks, name.clone(), (|| {
            let found = regime_of(&model, kind);
            if found != Regime::Low {
                return Err(Error::RegimeMismatch {
                    expected: Regime::Low,
                    found,
                });
            }
            let worst = min_termination_probability_on_low_set(&model, v.delta_samples, rng.child(5))?;
            Ok(vec![CheckRecord::new(name.clone(), worst, 0.5, None, worst >= 0.5)])
        })());

        let name = format!("gated-coupling/{kind}");
        push_checks(&mut checks, name.clone(), (|| {
            let set = RegimeSet::for_model(kind, &model, v.alpha)?;
            let r = estimate_gated_coupling(&set, &model, &sgd, v.coupling_trials, rng.child(6))?;
            Ok(vec![CheckRecord::new(name.clone(), r.violations as f64, 0.0, None, r.violations == 0)])
        })());
    }
    Ok(checks)
}

fn verify_bounds(config: &ExperimentConfig) -> Result<CommandOutput> {
    let checks = verification_checks(config)?;
    let status = if checks.iter().all(|c| c.pass) {
        Status::Ok
    } else {
        Status::ChecksFailed
    };
    let report = VerifyReport {
        config_hash: config.hash(),
        seed: config.seed,
        config,
        checks,
    };
    let mut bytes = serde_json::to_vec_pretty(&report).map_err(|e| Error::Io(e.into()))?;
    bytes.push(b'\n');
    Ok(CommandOutput { bytes, status })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small() -> ExperimentConfig {
        let mut c = ExperimentConfig::default();
        c.trials = 2;
        c.synthetic.d = 5;
        c.sweep.sigmas = vec![0.5];
        c.compare.stoppers = vec!["zero-overhead".into(), "svs-4".into(), "zero-overhead+continue".into()];
        c.validation_size = 1000;
        c
    }

    fn text(out: &CommandOutput) -> String {
        String::from_utf8(out.bytes.clone()).unwrap()
    }

    #[test]
    fn sweep_rows_and_ratio() {
        let c = small();
        let out = execute(Command::SweepSigma, &c).unwrap();
        let t = text(&out);
        let mut lines = t.lines();
        assert_eq!(lines.next().unwrap(), format!("# config={} seed=0", c.hash()));
        assert_eq!(lines.next().unwrap(), SWEEP_HEADER.join(","));
        let rows: Vec<Vec<&str>> = lines.map(|l| l.split(',').collect()).collect();
        assert_eq!(rows.len(), 4);
        for r in rows {
            let (acc, opt, ratio): (f64, f64, f64) = (r[8].parse().unwrap(), r[9].parse().unwrap(), r[10].parse().unwrap());
            assert_eq!(ratio, acc / opt);
        }
        assert_eq!(out, execute(Command::SweepSigma, &c).unwrap());
    }

    #[test]
    fn compare_continuation_rows() {
        let c = small();
        let t = text(&execute(Command::CompareStoppers, &c).unwrap());
        let rows: Vec<Vec<String>> =
            t.lines().skip(2).map(|l| l.split(',').map(String::from).collect()).collect();
        assert_eq!(rows.len(), 2 * 2 * 3);
        for chunk in rows.chunks(3) {
            let k: u64 = chunk[0][4].parse().unwrap();
            let cont: u64 = chunk[2][4].parse().unwrap();
            assert_eq!(chunk[2][2], "zero-overhead+continue");
            assert_eq!(cont, k + (1.5 * k as f64).floor() as u64);
            let svs: u64 = chunk[1][4].parse().unwrap();
            assert!(svs <= 5 * 8);
        }
    }

    #[test]
    fn student_t2_compare_runs() {
        let mut c = small();
        c.synthetic.generator = Generator::StudentT2;
        let out = execute(Command::CompareStoppers, &c).unwrap();
        assert_eq!(out.status, Status::Ok);
        assert!(execute(Command::SweepSigma, &c).is_err());
    }

    #[test]
    fn missing_real_data_is_a_skip() {
        let mut c = small();
        c.real.path = Some("/nonexistent/mnist".into());
        let out = execute(Command::RunReal, &c).unwrap();
        assert_eq!(out.status.exit_code(), 3);
        assert_eq!(text(&out).lines().count(), 2);
    }

    #[test]
    fn verify_negative_control() {
        let mut c = small();
        c.losses = vec![LossKind::Logistic];
        c.max_iter = 2000;
        c.verify.alpha = 0.0;
        c.verify.trials = 4;
        c.verify.hitting_trials = 2;
        c.verify.coupling_trials = 2;
        c.verify.n_mc = 200;
        let checks = verification_checks(&c).unwrap();
        let drift: Vec<_> = checks.iter().filter(|r| r.check.starts_with("drift/")).collect();
        assert!(!drift.is_empty() && drift.iter().all(|r| !r.pass));
        assert_eq!(execute(Command::VerifyBounds, &c).unwrap().status, Status::ChecksFailed);
    }

    #[test]
    fn overrides() {
        let mut c = ExperimentConfig::default();
        apply_overrides(&mut c, Command::VerifyBounds, Some(9), Some(7));
        assert_eq!((c.seed, c.trials, c.verify.trials), (9, 10, 7));
        apply_overrides(&mut c, Command::SweepSigma, None, Some(3));
        assert_eq!((c.seed, c.trials), (9, 3));
    }
}
