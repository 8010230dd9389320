//! Off-axis component of the stopped iterate compared with `σα√(2/π)·E[T]`.

use sgd_termination::losses::LossKind;
use sgd_termination::numerics::{RngState, Vector};
use sgd_termination::sgd::{SgdConfig, StopRule};
use sgd_termination::theory::{angle_bound, GaussianFoldedModel};
use sgd_termination::verify::estimate_angle_deviation;

fn main() -> sgd_termination::Result<()> {
    let model = GaussianFoldedModel::axis_aligned(20, 1.0, 0.3)?;
    let alpha = 0.05;
    let v = Vector::basis(20, 1);
    for kind in LossKind::ALL {
        let config = SgdConfig::new(kind, alpha, 1_000_000, StopRule::ExtraSample)?;
        let r = estimate_angle_deviation(&model, &config, &v, 500, RngState::new(5, 0))?;
        println!(
            "{}: E|vᵀθ_T| ≈ {:.4} ± {:.4}, bound {:.4}, slack {:.4} ± {:.4}",
            kind.name(),
            r.deviation.mean,
            r.deviation.stderr,
            angle_bound(&model, alpha, r.stopping_time.mean),
            r.slack.mean,
            r.slack.stderr
        );
    }
    Ok(())
}
