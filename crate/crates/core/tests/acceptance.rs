//! Acceptance criteria. Each test prints one `PASS`/`FAIL` line before
//! asserting, so `cargo test --test acceptance -- --nocapture` doubles as a
//! report.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::process::Command as Process;

use sgd_termination::data::{load_cifar10_batch, load_csv, load_idx, ParseError, CIFAR10_RECORD_LEN};
use sgd_termination::experiment::{execute, Command, ExperimentConfig, DATA_DIR_ENV};
use sgd_termination::losses::{ray_derivative, ray_objective, LossKind};
use sgd_termination::numerics::{NormalQuadrature, Rng, RngState, Vector};
use sgd_termination::sgd::{run_svs, SampleSource, SgdConfig, StopRule};
use sgd_termination::theory::{
    angle_bound, hinge_relation_residual, hinge_w, low_regime_constants, low_regime_expected_t_bound,
    minimizer_rho_star, GaussianFoldedModel, Regime, RegimeSet,
};
use sgd_termination::verify::{
    check_drift_inequality, drift_probes, estimate_angle_deviation, estimate_expected_t, estimate_hitting_time,
    min_termination_probability_on_low_set,
};

fn report(id: u32, name: &str, pass: bool, detail: impl AsRef<str>) {
    println!("{} [{id:>2}] {name}: {}", if pass { "PASS" } else { "FAIL" }, detail.as_ref());
    assert!(pass, "criterion {id} ({name}) failed: {}", detail.as_ref());
}

fn bin() -> &'static str {
    env!("CARGO_BIN_EXE_sgd-termination")
}

#[test]
fn c01_accuracy_ratio_sweep() {
    let config = ExperimentConfig::from_toml_str("seed = 2024\nalpha_tilde = 0.1\n").unwrap();
    assert_eq!(config.synthetic.d, 500);
    assert_eq!(config.sweep.sigmas, vec![0.05, 0.5, 1.0, 1.5, 2.0]);
    assert_eq!(config.trials, 10);
    let out = execute(Command::SweepSigma, &config).unwrap();
    let text = String::from_utf8(out.bytes).unwrap();
    let mut cells: BTreeMap<(String, String), Vec<f64>> = BTreeMap::new();
    for line in text.lines().skip(2) {
        let f: Vec<&str> = line.split(',').collect();
        assert_eq!(f[4], "false", "censored sweep run: {line}");
        cells.entry((f[0].into(), f[1].into())).or_default().push(f[10].parse().unwrap());
    }
    assert_eq!(cells.len(), 10);
    let mut worst = (String::new(), f64::INFINITY);
    let mut detail = Vec::new();
    for ((loss, sigma), ratios) in &cells {
        assert_eq!(ratios.len(), 10);
        let mean = ratios.iter().sum::<f64>() / 10.0;
        detail.push(format!("{loss}@{sigma}={mean:.4}"));
        if mean < worst.1 {
            worst = (format!("{loss} σ={sigma}"), mean);
        }
    }
    report(
        1,
        "mean accuracy/optimal ≥ 0.93 per cell",
        worst.1 >= 0.93,
        format!("worst {} = {:.4}; {}", worst.0, worst.1, detail.join(" ")),
    );
}

#[test]
fn c02_theorem1_low_regime_stopping_time() {
    let model = GaussianFoldedModel::axis_aligned(10, 1.0, 0.1).unwrap();
    for (i, kind) in LossKind::ALL.into_iter().enumerate() {
        let config = SgdConfig::new(kind, 0.1, 1_000_000, StopRule::ExtraSample).unwrap();
        let bound = low_regime_expected_t_bound(kind, &model, 0.1).unwrap();
        let s = estimate_expected_t(&model, &config, 500, RngState::new(202, i as u64)).unwrap();
        report(
            2,
            &format!("E[T] finite and below bound ({kind})"),
            s.n_censored == 0 && s.mean <= bound,
            format!("mean T {:.3} ± {:.3}, censored {}, bound {bound:.6e}", s.mean, s.stderr, s.n_censored),
        );
    }
}

#[test]
fn c03_angle_deviation() {
    let model = GaussianFoldedModel::axis_aligned(20, 1.0, 0.3).unwrap();
    let v = Vector::basis(20, 1);
    for (i, kind) in LossKind::ALL.into_iter().enumerate() {
        let config = SgdConfig::new(kind, 0.05, 1_000_000, StopRule::ExtraSample).unwrap();
        let r = estimate_angle_deviation(&model, &config, &v, 500, RngState::new(303, i as u64)).unwrap();
        let bound = angle_bound(&model, 0.05, r.stopping_time.mean);
        // The deviation and the bound come from the same trials, so the
        // propagated error is the standard error of their per-trial difference.
        report(
            3,
            &format!("E|vᵀθ_T| ≤ σα√(2/π)E[T] + 3se ({kind})"),
            r.deviation.n_censored == 0 && r.deviation.mean <= bound + 3.0 * r.slack.stderr,
            format!("deviation {:.5}, bound {bound:.5}, se {:.5}", r.deviation.mean, r.slack.stderr),
        );
    }
}

#[test]
fn c04_minimizer() {
    let quad = NormalQuadrature::default();
    for kind in LossKind::ALL {
        for ratio in [0.25, 0.5, 1.0, 2.0] {
            for mu_norm in [1.0, 3.0] {
                let sigma = ratio * mu_norm;
                let model = GaussianFoldedModel::axis_aligned(4, mu_norm, sigma).unwrap();
                let rho = minimizer_rho_star(kind, &model).unwrap();
                let slope = ray_derivative(kind, rho, mu_norm, sigma, &quad).unwrap();
                let h = 1e-4 * rho;
                let (mut best, mut best_j) = (0.0, f64::INFINITY);
                for i in -5000..=5000 {
                    let r = rho + i as f64 * h;
                    let j = ray_objective(kind, r, mu_norm, sigma, &quad).unwrap();
                    if j < best_j {
                        (best, best_j) = (r, j);
                    }
                }
                let mut pass = slope.abs() <= 1e-8 * mu_norm * mu_norm && (best - rho).abs() <= h * (1.0 + 1e-9);
                let mut detail = format!("ρ* {rho:.10}, dJ/dρ {slope:.2e}, grid argmin {best:.10}");
                if kind == LossKind::Hinge {
                    let res = hinge_relation_residual(hinge_w(mu_norm, sigma), mu_norm, sigma);
                    pass &= res.abs() <= 1e-10;
                    detail.push_str(&format!(", residual {res:.1e}"));
                }
                report(4, &format!("minimiser ({kind}, σ/‖μ‖={ratio}, ‖μ‖={mu_norm})"), pass, detail);
            }
        }
    }
}

#[test]
fn c05_drift_inequality() {
    let cases = [(LossKind::Logistic, 0.1), (LossKind::Hinge, 0.1), (LossKind::Hinge, 1.2)];
    for (i, (kind, ratio)) in cases.into_iter().enumerate() {
        let model = GaussianFoldedModel::axis_aligned(10, 1.0, ratio).unwrap();
        let probes = drift_probes(&model, &[-5.0, 0.0, 0.9], 1.0, RngState::new(505, i as u64));
        let set = RegimeSet::for_model(kind, &model, 0.1).unwrap();
        assert_eq!(set.regime, Regime::Low);
        let rng = RngState::new(506, i as u64);
        let out = check_drift_inequality(&set, &model, &probes, 20_000, rng).unwrap();
        let detail: Vec<String> = out.iter().map(|p| format!("{:.3}±{:.3}", p.estimate, p.stderr)).collect();
        report(
            5,
            &format!("drift ≤ −α‖μ‖² + 4se ({kind}, σ={ratio}‖μ‖)"),
            out.iter().all(|p| p.pass),
            format!("b {}, estimates [{}]", set.params.b, detail.join(", ")),
        );
        let frozen = RegimeSet::for_model(kind, &model, 0.0).unwrap();
        let control = check_drift_inequality(&frozen, &model, &probes, 20_000, rng).unwrap();
        report(
            5,
            &format!("α = 0 control fails ({kind}, σ={ratio}‖μ‖)"),
            control.iter().all(|p| !p.pass),
            format!("{} of {} probes fail", control.iter().filter(|p| !p.pass).count(), control.len()),
        );
    }
}

#[test]
fn c06_first_entry_time() {
    let model = GaussianFoldedModel::axis_aligned(10, 1.0, 0.1).unwrap();
    for (i, kind) in LossKind::ALL.into_iter().enumerate() {
        let (_, b, m) = low_regime_constants(kind, 1.0, 0.1);
        let set = RegimeSet::for_model(kind, &model, 0.1).unwrap();
        let config = SgdConfig::new(kind, 0.1, 1_000_000, StopRule::None).unwrap();
        let s = estimate_hitting_time(&Vector::zeros(10), &set, &model, &config, 300, RngState::new(606, i as u64))
            .unwrap();
        let bound = m * m / b;
        report(
            6,
            &format!("E[τ₁] ≤ M²/(α‖μ‖²) ({kind})"),
            s.n_censored == 0 && s.mean <= bound,
            format!("mean {:.3}, censored {}, bound {bound:.4e}", s.mean, s.n_censored),
        );
    }
}

#[test]
fn c07_delta_on_target_set() {
    let mut worst = f64::INFINITY;
    for (i, (mu_norm, sigma)) in [(1.0, 0.1), (1.0, 0.3), (2.0, 0.5)].into_iter().enumerate() {
        let model = GaussianFoldedModel::axis_aligned(10, mu_norm, sigma).unwrap();
        worst = worst.min(min_termination_probability_on_low_set(&model, 1000, RngState::new(707, i as u64)).unwrap());
    }
    report(7, "termination probability ≥ 1/2 on μᵀθ ≥ 1", worst >= 0.5, format!("minimum {worst}"));
}

/// Arbitrary bounded samples whose sign pattern changes with the seed.
struct Adversarial {
    dim: usize,
    scale: f64,
}

impl SampleSource for Adversarial {
    fn dim(&self) -> usize {
        self.dim
    }

    fn next_into(&mut self, rng: &mut Rng, out: &mut [f64]) -> bool {
        for x in out.iter_mut() {
            *x = self.scale * (2.0 * rng.uniform_open() - 1.0);
        }
        true
    }
}

#[test]
fn c08_svs_cap() {
    let mut worst = 0.0f64;
    for p in [1usize, 4, 16] {
        let cap = ((p + 1) * 2 * p) as u64;
        for seed in 0..200u64 {
            let mut meta = RngState::new(seed, 808).rng();
            let kind = if meta.coin() { LossKind::Logistic } else { LossKind::Hinge };
            let alpha = [0.0, 1e-3, 0.1, 10.0][meta.index(4)];
            let mut source = Adversarial {
                dim: 1 + meta.index(8),
                scale: [0.01, 1.0, 100.0][meta.index(3)],
            };
            let config = SgdConfig::new(kind, alpha, 10 * cap, StopRule::small_validation(p).unwrap()).unwrap();
            let res = run_svs(&mut source, &config, RngState::new(seed, 0)).unwrap();
            assert!(!res.censored && res.iterations <= cap, "p = {p}, seed = {seed}: {}", res.iterations);
            worst = worst.max(res.iterations as f64 / cap as f64);
        }
    }
    report(8, "SVS stops within (p+1)·2p iterations", worst <= 1.0, format!("max T/cap {worst:.3} over 600 runs"));
}

fn small_config(dir: &Path) -> PathBuf {
    let path = dir.join("small.toml");
    let text = format!(
        r#"
trials = 2
max_iter = 200000
[synthetic]
d = 20
[sweep]
sigmas = [0.5, 1.0]
[compare]
stoppers = ["zero-overhead", "svs-8", "zero-overhead+continue"]
[verify]
trials = 20
hitting_trials = 10
coupling_trials = 10
n_mc = 500
delta_samples = 50
[real]
path = "{}"
"#,
        dir.join("absent").display()
    );
    std::fs::write(&path, text).unwrap();
    path
}

fn run_cli(args: &[&str]) -> (i32, Vec<u8>) {
    let out = Process::new(bin()).args(args).output().unwrap();
    (out.status.code().unwrap(), out.stdout)
}

#[test]
fn c09_determinism() {
    let dir = tempfile::tempdir().unwrap();
    let config = small_config(dir.path());
    let config = config.to_str().unwrap();
    for (cmd, code) in [("sweep-sigma", 0), ("compare-stoppers", 0), ("verify-bounds", 0), ("run-real", 3)] {
        let mut outputs = Vec::new();
        for rep in 0..2 {
            let out = dir.path().join(format!("{cmd}-{rep}"));
            let (status, _) =
                run_cli(&[cmd, "--config", config, "--seed", "99", "--trials", "2", "--out", out.to_str().unwrap()]);
            assert_eq!(status, code, "{cmd}");
            outputs.push(std::fs::read(out).unwrap());
        }
        report(
            9,
            &format!("{cmd} byte-identical across runs"),
            outputs[0] == outputs[1] && !outputs[0].is_empty(),
            format!("{} bytes", outputs[0].len()),
        );
    }
}

fn idx_bytes(magic: u32, shape: &[usize], data: &[u8]) -> Vec<u8> {
    let mut out = magic.to_be_bytes().to_vec();
    for &s in shape {
        out.extend((s as u32).to_be_bytes());
    }
    out.extend(data);
    out
}

#[test]
fn c10_parser_fidelity() {
    let mut rng = RngState::new(1010, 0).rng();
    let mut bytes = |n: usize| (0..n).map(|_| (rng.next_u64() & 0xff) as u8).collect::<Vec<u8>>();

    let images = idx_bytes(0x0803, &[7, 28, 28], &bytes(7 * 28 * 28));
    let labels = idx_bytes(0x0801, &[7], &bytes(7).iter().map(|b| b % 10).collect::<Vec<_>>());
    let mut round_trip = true;
    for fixture in [&images, &labels] {
        let t = load_idx(fixture).unwrap();
        let magic = if t.shape.len() == 3 { 0x0803 } else { 0x0801 };
        round_trip &= idx_bytes(magic, &t.shape, &t.data) == *fixture;
    }

    let mut cifar = Vec::new();
    for i in 0..5u8 {
        cifar.push(i * 2 % 10);
        cifar.extend(bytes(CIFAR10_RECORD_LEN - 1));
    }
    let points = load_cifar10_batch(&cifar, false).unwrap();
    let mut back = Vec::new();
    for p in &points {
        back.push(p.y);
        back.extend(p.zeta.as_slice().iter().map(|&v| v as u8));
    }
    round_trip &= back == cifar;
    report(10, "IDX and CIFAR fixtures round-trip byte-exactly", round_trip, "3 fixtures");

    let mut panics = 0;
    let mut typed = 0;
    for i in 0..10_000 {
        let mut input = bytes(i % 64 + if i % 7 == 0 { 3073 } else { 0 });
        // Bias a quarter of the cases towards valid IDX prefixes.
        if i % 4 == 0 && input.len() >= 4 {
            input[..4].copy_from_slice(&[0, 0, 8, if i % 8 == 0 { 1 } else { 3 }]);
        }
        let r = std::panic::catch_unwind(|| {
            let a = load_idx(&input).err();
            let b = load_cifar10_batch(&input, true).err();
            let c = load_csv(input.as_slice()).err();
            [a, b, c].into_iter().flatten().filter(|e: &ParseError| !e.to_string().is_empty()).count()
        });
        match r {
            Ok(n) => typed += n,
            Err(_) => panics += 1,
        }
    }
    report(10, "10⁴ random inputs yield typed errors only", panics == 0, format!("{typed} typed errors, {panics} panics"));
}

fn write_idx_split(dir: &Path, prefix: &str, n: usize, rng: &mut Rng) {
    let side = 6;
    let mut pixels = Vec::with_capacity(n * side * side);
    let mut labels = Vec::with_capacity(n);
    for i in 0..n {
        let label = [1u8, 8, 3][i % 3];
        labels.push(label);
        for j in 0..side * side {
            // Class 1 lights the left half, class 8 the right half.
            let lit = match label {
                1 => j % side < side / 2,
                8 => j % side >= side / 2,
                _ => j < side,
            };
            let base = if lit { 150.0 } else { 60.0 };
            pixels.push((base + 60.0 * rng.standard_normal()).clamp(0.0, 255.0) as u8);
        }
    }
    let (img, lab) = match prefix {
        "train" => ("train-images-idx3-ubyte", "train-labels-idx1-ubyte"),
        _ => ("t10k-images-idx3-ubyte", "t10k-labels-idx1-ubyte"),
    };
    std::fs::write(dir.join(img), idx_bytes(0x0803, &[n, side, side], &pixels)).unwrap();
    std::fs::write(dir.join(lab), idx_bytes(0x0801, &[n], &labels)).unwrap();
}

fn check_real_run(id: u32, name: &str, bytes: &[u8]) {
    let text = String::from_utf8(bytes.to_vec()).unwrap();
    let rows: Vec<Vec<&str>> = text.lines().skip(2).map(|l| l.split(',').collect()).collect();
    let zero: Vec<&Vec<&str>> = rows.iter().filter(|r| r[2] == "zero-overhead").collect();
    let acc: f64 = zero.iter().map(|r| r[11].parse::<f64>().unwrap()).sum::<f64>() / zero.len() as f64;
    let baseline: f64 = zero[0][12].parse().unwrap();
    report(id, name, !zero.is_empty() && acc > baseline, format!("mean test accuracy {acc:.4} vs prior {baseline:.4}"));
}

#[test]
fn c11_real_data_smoke() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("mnist.toml");
    let mnist = std::env::var_os(DATA_DIR_ENV)
        .map(PathBuf::from)
        .unwrap_or_else(|| Path::new(env!("CARGO_MANIFEST_DIR")).join("../../data"))
        .join("mnist");
    std::fs::write(
        &cfg,
        format!("alpha_tilde = 0.005\ntrials = 3\n[real]\ndataset = \"mnist\"\npath = \"{}\"\n", mnist.display()),
    )
    .unwrap();
    let out = dir.path().join("mnist.csv");
    let (code, _) = run_cli(&["run-real", "--config", cfg.to_str().unwrap(), "--seed", "11", "--out", out.to_str().unwrap()]);
    if mnist.join("train-images-idx3-ubyte").exists() {
        assert_eq!(code, 0);
        check_real_run(11, "MNIST 1-vs-8 beats the class prior", &std::fs::read(&out).unwrap());
    } else {
        let header_only = std::fs::read_to_string(&out).unwrap().lines().count() == 2;
        report(11, "absent MNIST exits with the skip code", code == 3 && header_only, format!("exit {code}"));
    }

    let fixture = dir.path().join("fixture");
    std::fs::create_dir(&fixture).unwrap();
    let mut rng = RngState::new(1111, 0).rng();
    write_idx_split(&fixture, "train", 3000, &mut rng);
    write_idx_split(&fixture, "test", 600, &mut rng);
    std::fs::write(
        &cfg,
        format!("alpha_tilde = 0.005\ntrials = 3\n[real]\ndataset = \"mnist\"\npath = \"{}\"\n", fixture.display()),
    )
    .unwrap();
    let (code, _) = run_cli(&["run-real", "--config", cfg.to_str().unwrap(), "--seed", "11", "--out", out.to_str().unwrap()]);
    assert_eq!(code, 0);
    check_real_run(11, "IDX fixture 1-vs-8 beats the class prior", &std::fs::read(&out).unwrap());
}

#[test]
fn cli_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.toml");
    std::fs::write(&bad, "no_such_key = 1\n").unwrap();
    let (code, _) = run_cli(&["sweep-sigma", "--config", bad.to_str().unwrap()]);
    assert_eq!(code, 2);
    let (code, _) = run_cli(&["verify-bounds", "--config", dir.path().join("missing.toml").to_str().unwrap()]);
    assert_eq!(code, 2);

    let control = dir.path().join("control.toml");
    std::fs::write(&control, "losses = [\"hinge\"]\n[verify]\nalpha = 0.0\ntrials = 5\nn_mc = 100\nhitting_trials = 2\ncoupling_trials = 2\n").unwrap();
    let (code, stdout) = run_cli(&["verify-bounds", "--config", control.to_str().unwrap(), "--seed", "3"]);
    assert_eq!(code, 4);
    let report: serde_json::Value = serde_json::from_slice(&stdout).unwrap();
    assert_eq!(report["seed"], 3);
    assert_eq!(report["config"]["verify"]["alpha"], 0.0);
    let checks = report["checks"].as_array().unwrap();
    assert!(checks.iter().any(|c| c["check"].as_str().unwrap().starts_with("drift/") && c["pass"] == false));
}
