//! One-step drift of the Lyapunov function at a few probes, and the frozen
//! chain (`α = 0`) that must fail the same inequality.

use sgd_termination::losses::LossKind;
use sgd_termination::numerics::RngState;
use sgd_termination::theory::{GaussianFoldedModel, RegimeSet};
use sgd_termination::verify::{check_drift_inequality, drift_probes};

fn main() -> sgd_termination::Result<()> {
    let model = GaussianFoldedModel::axis_aligned(10, 1.0, 0.1)?;
    let probes = drift_probes(&model, &[-5.0, 0.0, 0.9], 1.0, RngState::new(1, 0));
    for alpha in [0.1, 0.0] {
        let set = RegimeSet::for_model(LossKind::Hinge, &model, alpha)?;
        println!("α = {alpha} ({:?} regime)", set.regime);
        for p in check_drift_inequality(&set, &model, &probes, 20_000, RngState::new(1, 1))? {
            println!(
                "  μᵀθ = {:>5.2}: ΔV ≈ {:>10.4} ± {:.4}, need < {:.3}  {}",
                p.theta.dot(model.mu())?,
                p.estimate,
                p.stderr,
                -p.b,
                if p.pass { "ok" } else { "fails" }
            );
        }
    }
    Ok(())
}
