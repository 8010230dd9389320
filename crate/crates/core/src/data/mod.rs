//! Synthetic generators, the folding reduction, centering and step
//! scaling, real-data readers and accuracy scoring.

mod formats;
mod synthetic;

use std::sync::Arc;

use serde::{Deserialize, Serialize};

pub use formats::{
    idx_points, load_cifar10_batch, load_csv, load_idx, load_mnist, IdxTensor, MnistSplit, ParseError, CIFAR10_RECORD_LEN,
};
pub use synthetic::{FoldedGaussianSource, GaussianMixture, StudentT2Mixture};

use crate::error::{invalid, Error, Result};
use crate::numerics::{axpy, check_dims, dot, Rng, RngState, Vector};
use crate::sgd::SampleSource;

/// A raw example `(ζ, y)`. Binary tasks use `y ∈ {0, 1}`; multi-class
/// readers keep the original label.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LabeledPoint {
    pub zeta: Vector,
    pub y: u8,
}

impl LabeledPoint {
    pub fn new(zeta: Vector, y: u8) -> Self {
        Self { zeta, y }
    }
}

fn sign_of(y: u8) -> Result<f64> {
    match y {
        0 => Ok(-1.0),
        1 => Ok(1.0),
        other => Err(invalid("y", format!("binary label expected, found {other}"))),
    }
}

/// `(2y − 1)·(ζ − offset)`.
pub fn fold(point: &LabeledPoint, offset: &Vector) -> Result<Vector> {
    check_dims(offset.dim(), point.zeta.dim())?;
    let mut out = vec![0.0; offset.dim()];
    fold_into(point.zeta.as_slice(), point.y, offset.as_slice(), &mut out)?;
    Ok(Vector::new(out).expect("finite inputs"))
}

/// Inverse of [`fold`] for a known label: `(2y − 1)·ξ + offset`.
pub fn unfold(xi: &Vector, y: u8, offset: &Vector) -> Result<Vector> {
    check_dims(offset.dim(), xi.dim())?;
    offset.add_scaled(sign_of(y)?, xi)
}

fn fold_into(zeta: &[f64], y: u8, offset: &[f64], out: &mut [f64]) -> Result<()> {
    let s = sign_of(y)?;
    for ((o, z), c) in out.iter_mut().zip(zeta).zip(offset) {
        *o = s * (z - c);
    }
    Ok(())
}

/// A generator or reader of labeled examples.
pub trait LabeledSource {
    fn dim(&self) -> usize;

    /// Writes `ζ` into `out` and returns its label, or `None` when exhausted.
    fn next_labeled(&mut self, rng: &mut Rng, out: &mut [f64]) -> Option<u8>;

    fn next_point(&mut self, rng: &mut Rng) -> Option<LabeledPoint> {
        let mut buf = vec![0.0; self.dim()];
        let y = self.next_labeled(rng, &mut buf)?;
        Some(LabeledPoint::new(Vector::new(buf).ok()?, y))
    }

    fn take_points(&mut self, rng: &mut Rng, n: usize) -> Vec<LabeledPoint> {
        (0..n).map_while(|_| self.next_point(rng)).collect()
    }
}

/// Folds a labeled stream with a fixed offset, giving the SGD engine its
/// `ξ`-samples.
#[derive(Debug, Clone)]
pub struct FoldedStream<L> {
    inner: L,
    offset: Vector,
    buf: Vec<f64>,
}

impl<L: LabeledSource> FoldedStream<L> {
    pub fn new(inner: L, offset: Vector) -> Result<Self> {
        check_dims(inner.dim(), offset.dim())?;
        let buf = vec![0.0; offset.dim()];
        Ok(Self { inner, offset, buf })
    }

    pub fn offset(&self) -> &Vector {
        &self.offset
    }
}

impl<L: LabeledSource> SampleSource for FoldedStream<L> {
    fn dim(&self) -> usize {
        self.offset.dim()
    }

    fn next_into(&mut self, rng: &mut Rng, out: &mut [f64]) -> bool {
        match self.inner.next_labeled(rng, &mut self.buf) {
            Some(y) => fold_into(&self.buf, y, self.offset.as_slice(), out).is_ok(),
            None => false,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DataOrigin {
    SyntheticGaussian,
    SyntheticT2,
    Mnist,
    Cifar10,
    Csv,
}

/// A nonempty binary dataset of uniform dimension.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    points: Vec<LabeledPoint>,
    origin: DataOrigin,
}

impl Dataset {
    pub fn new(points: Vec<LabeledPoint>, origin: DataOrigin) -> Result<Self> {
        let first = points.first().ok_or_else(|| invalid("points", "dataset is empty"))?;
        let d = first.zeta.dim();
        for p in &points {
            check_dims(d, p.zeta.dim())?;
            sign_of(p.y)?;
        }
        Ok(Self { points, origin })
    }

    pub fn points(&self) -> &[LabeledPoint] {
        &self.points
    }

    pub fn origin(&self) -> DataOrigin {
        self.origin
    }

    pub fn dim(&self) -> usize {
        self.points[0].zeta.dim()
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Share of the majority class, the accuracy of a constant predictor.
    pub fn majority_rate(&self) -> f64 {
        let ones = self.points.iter().filter(|p| p.y == 1).count();
        ones.max(self.len() - ones) as f64 / self.len() as f64
    }

    pub fn folded(&self, offset: &Vector) -> Result<Vec<Vector>> {
        self.points.iter().map(|p| fold(p, offset)).collect()
    }
}

/// Keeps classes `class_a` (relabelled 0) and `class_b` (relabelled 1), in order.
pub fn make_binary_task(points: &[LabeledPoint], class_a: u8, class_b: u8, origin: DataOrigin) -> Result<Dataset> {
    if class_a == class_b {
        return Err(invalid("class_b", "must differ from class_a"));
    }
    let out: Vec<LabeledPoint> = points
        .iter()
        .filter_map(|p| match p.y {
            y if y == class_a => Some(LabeledPoint::new(p.zeta.clone(), 0)),
            y if y == class_b => Some(LabeledPoint::new(p.zeta.clone(), 1)),
            _ => None,
        })
        .collect();
    for (class, y) in [(class_a, 0), (class_b, 1)] {
        if !out.iter().any(|p| p.y == y) {
            return Err(invalid("points", format!("class {class} is absent")));
        }
    }
    Dataset::new(out, origin)
}

/// Cycles through a dataset in a fresh seeded order each epoch.
#[derive(Debug, Clone)]
pub struct EpochStream {
    data: Arc<Dataset>,
    order: Vec<usize>,
    pos: usize,
    epochs_started: u64,
    max_epochs: Option<u64>,
}

impl EpochStream {
    /// `max_epochs = None` cycles forever.
    pub fn new(data: Arc<Dataset>, max_epochs: Option<u64>) -> Self {
        let order = (0..data.len()).collect();
        Self {
            pos: data.len(),
            data,
            order,
            epochs_started: 0,
            max_epochs,
        }
    }

    pub fn epochs_started(&self) -> u64 {
        self.epochs_started
    }
}

impl LabeledSource for EpochStream {
    fn dim(&self) -> usize {
        self.data.dim()
    }

    fn next_labeled(&mut self, rng: &mut Rng, out: &mut [f64]) -> Option<u8> {
        if self.pos == self.order.len() {
            if self.max_epochs.is_some_and(|m| self.epochs_started >= m) {
                return None;
            }
            rng.shuffle(&mut self.order);
            self.pos = 0;
            self.epochs_started += 1;
        }
        let p = &self.data.points[self.order[self.pos]];
        self.pos += 1;
        out.copy_from_slice(p.zeta.as_slice());
        Some(p.y)
    }
}

/// Class means, their midpoint and the pooled residual scale `σ̃²`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CenteringStats {
    pub mu0_hat: Vector,
    pub mu1_hat: Vector,
    /// `(μ̂₀ + μ̂₁)/2`.
    pub offset: Vector,
    /// Mean of `‖ζⱼ − μ̂_{yⱼ}‖²` over the points used.
    pub sigma2_tilde: f64,
    pub n_used: usize,
}

impl CenteringStats {
    pub fn from_points(points: &[LabeledPoint]) -> Result<Self> {
        let first = points.first().ok_or_else(|| invalid("points", "must be nonempty"))?;
        let d = first.zeta.dim();
        let mut sums = [vec![0.0; d], vec![0.0; d]];
        let mut counts = [0usize; 2];
        for p in points {
            check_dims(d, p.zeta.dim())?;
            let s = sign_of(p.y)?;
            let c = usize::from(s > 0.0);
            axpy(1.0, p.zeta.as_slice(), &mut sums[c]);
            counts[c] += 1;
        }
        for c in 0..2 {
            if counts[c] == 0 {
                return Err(Error::MissingClass(c as u8));
            }
        }
        let [s0, s1] = sums;
        let mu0: Vec<f64> = s0.iter().map(|v| v / counts[0] as f64).collect();
        let mu1: Vec<f64> = s1.iter().map(|v| v / counts[1] as f64).collect();
        let residual: f64 = points
            .iter()
            .map(|p| {
                let m = if p.y == 1 { &mu1 } else { &mu0 };
                p.zeta.as_slice().iter().zip(m).map(|(z, m)| (z - m).powi(2)).sum::<f64>()
            })
            .sum();
        let offset = mu0.iter().zip(&mu1).map(|(a, b)| 0.5 * (a + b)).collect();
        Ok(Self {
            mu0_hat: Vector::new(mu0)?,
            mu1_hat: Vector::new(mu1)?,
            offset: Vector::new(offset)?,
            sigma2_tilde: residual / points.len() as f64,
            n_used: points.len(),
        })
    }
}

/// Centering from the first `n` draws of `source`. If a class is missing, a
/// fresh batch of `n` replaces the first; a second miss is an error.
pub fn estimate_centering<L: LabeledSource + ?Sized>(source: &mut L, rng: &mut Rng, n: usize) -> Result<CenteringStats> {
    if n < 2 {
        return Err(invalid("n", "must be at least 2"));
    }
    let mut last = None;
    for _ in 0..2 {
        let batch = source.take_points(rng, n);
        if batch.len() < n {
            return Err(invalid("source", format!("exhausted after {} of {n} centering draws", batch.len())));
        }
        match CenteringStats::from_points(&batch) {
            Err(e @ Error::MissingClass(_)) => last = Some(e),
            other => return other,
        }
    }
    Err(last.expect("loop ran"))
}

/// Smallest `σ̃²` used as a divisor; noiseless synthetic runs hit it.
pub const SIGMA2_FLOOR: f64 = 1e-12;

/// `α̃ / max(σ̃², 1e-12)`.
pub fn effective_step(alpha_tilde: f64, sigma2_tilde: f64) -> Result<f64> {
    if !(alpha_tilde > 0.0) || !alpha_tilde.is_finite() {
        return Err(invalid("alpha_tilde", "must be positive and finite"));
    }
    if !(sigma2_tilde >= 0.0) || !sigma2_tilde.is_finite() {
        return Err(invalid("sigma2_tilde", "must be finite and non-negative"));
    }
    Ok(alpha_tilde / sigma2_tilde.max(SIGMA2_FLOOR))
}

/// Fraction of folded samples with `ξᵀθ > 0`; a zero margin counts as wrong.
pub fn accuracy_on_set(theta: &Vector, folded: &[Vector]) -> Result<f64> {
    if folded.is_empty() {
        return Err(invalid("folded", "must be nonempty"));
    }
    let mut correct = 0usize;
    for xi in folded {
        check_dims(theta.dim(), xi.dim())?;
        if dot(xi.as_slice(), theta.as_slice()) > 0.0 {
            correct += 1;
        }
    }
    Ok(correct as f64 / folded.len() as f64)
}

/// Draws a folded validation set of `n` points from `source`.
pub fn folded_validation_set<L: LabeledSource + ?Sized>(
    source: &mut L,
    offset: &Vector,
    n: usize,
    rng: RngState,
) -> Result<Vec<Vector>> {
    let mut r = rng.rng();
    source.take_points(&mut r, n).iter().map(|p| fold(p, offset)).collect()
}
