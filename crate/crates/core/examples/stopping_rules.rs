//! The three stopping rules on the same Gaussian stream, side by side.

use sgd_termination::losses::LossKind;
use sgd_termination::numerics::RngState;
use sgd_termination::sgd::{run, SgdConfig, StopRule};
use sgd_termination::theory::GaussianFoldedModel;

fn main() -> sgd_termination::Result<()> {
    let model = GaussianFoldedModel::axis_aligned(50, 1.0, 0.5)?;
    let alpha = 0.1 / (model.sigma().powi(2) * model.dim() as f64);
    let rules = [
        StopRule::ExtraSample,
        StopRule::ZeroOverhead,
        StopRule::small_validation(32)?,
        StopRule::small_validation(128)?,
    ];
    println!("optimal accuracy {:.4}", model.optimal_accuracy());
    for kind in LossKind::ALL {
        for rule in rules {
            let config = SgdConfig::new(kind, alpha, 1_000_000, rule)?;
            let res = run(&mut model.source(), &config, RngState::new(11, 0))?;
            println!(
                "{:>8} {:>14}  T = {:>6}  samples = {:>6}  overhead = {:>5}  accuracy = {:.4}",
                kind.name(),
                rule.to_string(),
                res.iterations,
                res.samples_consumed,
                res.overhead,
                model.accuracy(&res.theta_final)?
            );
        }
    }
    Ok(())
}
