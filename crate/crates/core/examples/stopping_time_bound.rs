//! Empirical mean stopping time against the low-variance bound.

use sgd_termination::losses::LossKind;
use sgd_termination::numerics::RngState;
use sgd_termination::sgd::{SgdConfig, StopRule};
use sgd_termination::theory::{low_regime_constants, low_regime_expected_t_bound, GaussianFoldedModel};
use sgd_termination::verify::estimate_expected_t;

fn main() -> sgd_termination::Result<()> {
    let model = GaussianFoldedModel::axis_aligned(10, 1.0, 0.1)?;
    let alpha = 0.1;
    for kind in LossKind::ALL {
        let (c, b, m) = low_regime_constants(kind, model.mu_norm(), alpha);
        let bound = low_regime_expected_t_bound(kind, &model, alpha)?;
        let config = SgdConfig::new(kind, alpha, 1_000_000, StopRule::ExtraSample)?;
        let stats = estimate_expected_t(&model, &config, 500, RngState::new(3, 0))?;
        println!(
            "{}: c = {c}, b = {b}, M = {m}; E[T] ≈ {:.2} ± {:.2} (censored {}) vs bound {bound:.4e}",
            kind.name(),
            stats.mean,
            stats.stderr,
            stats.n_censored
        );
    }
    Ok(())
}
