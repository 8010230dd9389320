//! Experiment configuration, read from TOML. Every field has a default, so
//! an empty file is a valid config.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::data::{effective_step, GaussianMixture, StudentT2Mixture};
use crate::error::{Error, Result};
use crate::losses::LossKind;
use crate::numerics::Vector;
use crate::sgd::StopRule;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub seed: u64,
    /// Trials per cell of sweep-sigma, compare-stoppers and run-real.
    pub trials: usize,
    pub max_iter: u64,
    pub losses: Vec<LossKind>,
    /// Scaled step `α̃`; the run uses `α = α̃/σ̃²`. Ignored when `alpha` is set.
    pub alpha_tilde: f64,
    /// Raw step size, bypassing the `σ̃²` scaling.
    pub alpha: Option<f64>,
    pub centering_samples: usize,
    /// Validation draws for synthetic accuracy when no closed form exists.
    pub validation_size: usize,
    pub synthetic: SyntheticConfig,
    pub sweep: SweepConfig,
    pub compare: CompareConfig,
    pub verify: VerifyConfig,
    pub real: RealDataConfig,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            seed: 0,
            trials: 10,
            max_iter: 1_000_000,
            losses: LossKind::ALL.to_vec(),
            alpha_tilde: 0.1,
            alpha: None,
            centering_samples: 100,
            validation_size: 100_000,
            synthetic: SyntheticConfig::default(),
            sweep: SweepConfig::default(),
            compare: CompareConfig::default(),
            verify: VerifyConfig::default(),
            real: RealDataConfig::default(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Generator {
    Gaussian,
    StudentT2,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SyntheticConfig {
    pub generator: Generator,
    pub d: usize,
    /// Class-0 mean; `-e₁` when absent.
    pub mu0: Option<Vec<f64>>,
    /// Class-1 mean; `e₁` when absent, so the folded mean is `e₁`.
    pub mu1: Option<Vec<f64>>,
    pub sigma: f64,
    /// Scale of the t₂ entries.
    pub beta: f64,
}

impl Default for SyntheticConfig {
    fn default() -> Self {
        Self {
            generator: Generator::Gaussian,
            d: 500,
            mu0: None,
            mu1: None,
            sigma: 1.0,
            beta: 1.0,
        }
    }
}

impl SyntheticConfig {
    pub fn means(&self) -> Result<(Vector, Vector)> {
        let mu0 = match &self.mu0 {
            Some(v) => Vector::new(v.clone())?,
            None => Vector::basis(self.d, 0).scaled(-1.0),
        };
        let mu1 = match &self.mu1 {
            Some(v) => Vector::new(v.clone())?,
            None => Vector::basis(self.d, 0),
        };
        if mu0.dim() != self.d || mu1.dim() != self.d {
            return Err(config_error(format!("synthetic means must have dimension d = {}", self.d)));
        }
        Ok((mu0, mu1))
    }

    pub fn gaussian(&self, sigma: f64) -> Result<GaussianMixture> {
        let (mu0, mu1) = self.means()?;
        GaussianMixture::new(mu0, mu1, sigma)
    }

    pub fn student_t2(&self) -> Result<StudentT2Mixture> {
        StudentT2Mixture::new(self.beta, self.d)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepConfig {
    pub sigmas: Vec<f64>,
    pub rule: String,
}

impl Default for SweepConfig {
    fn default() -> Self {
        Self {
            sigmas: vec![0.05, 0.5, 1.0, 1.5, 2.0],
            rule: "zero-overhead".into(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DataChoice {
    Synthetic,
    Real,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CompareConfig {
    pub data: DataChoice,
    /// Stopping rules by label (`zero-overhead`, `extra-sample`, `svs-<p>`),
    /// or `<rule>+continue` for a continuation after the rule fires.
    pub stoppers: Vec<String>,
    /// A continuation adds `floor(continue_factor·T)` updates.
    pub continue_factor: f64,
}

impl Default for CompareConfig {
    fn default() -> Self {
        Self {
            data: DataChoice::Synthetic,
            stoppers: ["zero-overhead", "svs-32", "svs-128", "svs-512", "zero-overhead+continue"]
                .map(String::from)
                .to_vec(),
            continue_factor: 1.5,
        }
    }
}

/// A stopper column of the comparison.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stopper {
    Rule(StopRule),
    Continue(StopRule),
}

impl Stopper {
    pub fn parse(label: &str) -> Result<Self> {
        let parse_rule = |s: &str| s.parse::<StopRule>().map_err(|e| config_error(e.to_string()));
        match label.strip_suffix("+continue") {
            Some(base) => Ok(Stopper::Continue(parse_rule(base)?)),
            None => Ok(Stopper::Rule(parse_rule(label)?)),
        }
    }

    pub fn base(self) -> StopRule {
        match self {
            Stopper::Rule(r) | Stopper::Continue(r) => r,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DriftCase {
    pub loss: LossKind,
    /// `σ/‖μ‖`.
    pub sigma_ratio: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct VerifyConfig {
    pub mu_norm: f64,
    pub d: usize,
    pub sigma: f64,
    pub alpha: f64,
    /// Trials of the stopping-time and angle checks.
    pub trials: usize,
    pub rule: String,
    pub angle_sigma: f64,
    pub angle_alpha: f64,
    pub angle_d: usize,
    pub drift_cases: Vec<DriftCase>,
    pub drift_projections: Vec<f64>,
    pub drift_perp_norm: f64,
    pub n_mc: usize,
    pub hitting_trials: usize,
    pub delta_samples: usize,
    pub coupling_trials: usize,
}

impl Default for VerifyConfig {
    fn default() -> Self {
        Self {
            mu_norm: 1.0,
            d: 10,
            sigma: 0.1,
            alpha: 0.1,
            trials: 500,
            rule: "extra-sample".into(),
            angle_sigma: 0.3,
            angle_alpha: 0.05,
            angle_d: 20,
            drift_cases: vec![
                DriftCase {
                    loss: LossKind::Logistic,
                    sigma_ratio: 0.1,
                },
                DriftCase {
                    loss: LossKind::Hinge,
                    sigma_ratio: 0.1,
                },
                DriftCase {
                    loss: LossKind::Hinge,
                    sigma_ratio: 1.2,
                },
            ],
            drift_projections: vec![-5.0, 0.0, 0.9],
            drift_perp_norm: 1.0,
            n_mc: 20_000,
            hitting_trials: 300,
            delta_samples: 1000,
            coupling_trials: 200,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RealDataset {
    Mnist,
    Cifar10,
    Csv,
}

/// Environment variable naming the directory that holds `mnist/` and
/// `cifar-10-batches-bin/` when `real.path` is not set.
pub const DATA_DIR_ENV: &str = "SGD_TERMINATION_DATA";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RealDataConfig {
    pub dataset: RealDataset,
    /// MNIST: directory with the four uncompressed IDX files. CIFAR-10:
    /// directory with `data_batch_{1..5}.bin` and `test_batch.bin`. CSV: the
    /// training file.
    pub path: Option<PathBuf>,
    /// CSV only: the test file.
    pub test_path: Option<PathBuf>,
    /// Class mapped to `y = 0`; defaults to 1 (MNIST), 6 = frog (CIFAR-10), 0 (CSV).
    pub class_a: Option<u8>,
    /// Class mapped to `y = 1`; defaults to 8 (MNIST), 9 = truck (CIFAR-10), 1 (CSV).
    pub class_b: Option<u8>,
    /// Divide pixel bytes by 255.
    pub scale_pixels: bool,
    /// Stop a run once this many passes over the training set have started.
    pub max_epochs: Option<u64>,
}

impl Default for RealDataConfig {
    fn default() -> Self {
        Self {
            dataset: RealDataset::Mnist,
            path: None,
            test_path: None,
            class_a: None,
            class_b: None,
            scale_pixels: true,
            max_epochs: None,
        }
    }
}

impl RealDataConfig {
    pub fn classes(&self) -> (u8, u8) {
        let (a, b) = match self.dataset {
            RealDataset::Mnist => (1, 8),
            RealDataset::Cifar10 => (6, 9),
            RealDataset::Csv => (0, 1),
        };
        (self.class_a.unwrap_or(a), self.class_b.unwrap_or(b))
    }

    pub fn resolved_path(&self) -> PathBuf {
        if let Some(p) = &self.path {
            return p.clone();
        }
        let root = std::env::var_os(DATA_DIR_ENV).map(PathBuf::from).unwrap_or_else(|| PathBuf::from("data"));
        match self.dataset {
            RealDataset::Mnist => root.join("mnist"),
            RealDataset::Cifar10 => root.join("cifar-10-batches-bin"),
            RealDataset::Csv => root.join("train.csv"),
        }
    }
}

pub(crate) fn config_error(msg: impl Into<String>) -> Error {
    Error::Config(msg.into())
}

impl ExperimentConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| config_error(e.to_string()))
    }

    pub fn from_path(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| config_error(format!("{}: {e}", path.display())))?;
        Self::from_toml_str(&text)
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("config serialises")
    }

    /// First 16 hex digits of the SHA-256 of the canonical JSON form.
    pub fn hash(&self) -> String {
        let json = serde_json::to_vec(self).expect("config serialises");
        hex::encode(&Sha256::digest(&json)[..8])
    }

    /// Step size for a run whose centering measured `σ̃²`.
    pub fn step_size(&self, sigma2_tilde: f64) -> Result<f64> {
        match self.alpha {
            Some(a) => Ok(a),
            None => effective_step(self.alpha_tilde, sigma2_tilde),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let positive = |name: &str, v: f64| {
            if v > 0.0 && v.is_finite() {
                Ok(())
            } else {
                Err(config_error(format!("{name} must be positive and finite, got {v}")))
            }
        };
        if self.trials == 0 {
            return Err(config_error("trials must be at least 1"));
        }
        if self.max_iter == 0 {
            return Err(config_error("max_iter must be at least 1"));
        }
        if self.losses.is_empty() {
            return Err(config_error("losses must be nonempty"));
        }
        match self.alpha {
            Some(a) if !(a >= 0.0 && a.is_finite()) => return Err(config_error("alpha must be finite and non-negative")),
            Some(_) => {}
            None => positive("alpha_tilde", self.alpha_tilde)?,
        }
        if self.centering_samples < 2 {
            return Err(config_error("centering_samples must be at least 2"));
        }
        if self.validation_size == 0 {
            return Err(config_error("validation_size must be at least 1"));
        }
        if self.synthetic.d == 0 {
            return Err(config_error("synthetic.d must be at least 1"));
        }
        self.synthetic.means()?;
        if self.sweep.sigmas.is_empty() || self.sweep.sigmas.iter().any(|s| !(*s > 0.0 && s.is_finite())) {
            return Err(config_error("sweep.sigmas must be a nonempty list of positive values"));
        }
        Stopper::parse(&self.sweep.rule)?;
        if self.compare.stoppers.is_empty() {
            return Err(config_error("compare.stoppers must be nonempty"));
        }
        for s in &self.compare.stoppers {
            Stopper::parse(s)?;
        }
        if !(self.compare.continue_factor >= 0.0 && self.compare.continue_factor.is_finite()) {
            return Err(config_error("compare.continue_factor must be finite and non-negative"));
        }
        let v = &self.verify;
        positive("verify.mu_norm", v.mu_norm)?;
        positive("verify.sigma", v.sigma)?;
        positive("verify.angle_sigma", v.angle_sigma)?;
        positive("verify.angle_alpha", v.angle_alpha)?;
        if !(v.alpha >= 0.0 && v.alpha.is_finite()) {
            return Err(config_error("verify.alpha must be finite and non-negative"));
        }
        if v.d == 0 || v.angle_d < 2 {
            return Err(config_error("verify.d must be ≥ 1 and verify.angle_d ≥ 2"));
        }
        if v.trials < 2 || v.hitting_trials < 2 || v.coupling_trials < 2 || v.n_mc < 2 {
            return Err(config_error("verify trial counts and n_mc must be at least 2"));
        }
        v.rule.parse::<StopRule>().map_err(|e| config_error(e.to_string()))?;
        for c in &v.drift_cases {
            positive("verify.drift_cases.sigma_ratio", c.sigma_ratio)?;
        }
        let (a, b) = self.real.classes();
        if a == b {
            return Err(config_error("real.class_a and real.class_b must differ"));
        }
        Ok(())
    }
}
