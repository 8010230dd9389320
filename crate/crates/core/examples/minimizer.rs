//! Population minimiser `θ* = ρ*·μ` of both losses and how far the
//! derivative along the ray is from zero there.

use sgd_termination::losses::{ray_derivative, LossKind};
use sgd_termination::numerics::NormalQuadrature;
use sgd_termination::theory::{hinge_relation_residual, hinge_w, minimizer_rho_star, GaussianFoldedModel};

fn main() -> sgd_termination::Result<()> {
    let quad = NormalQuadrature::default();
    println!("{:>8} {:>6} {:>14} {:>12}", "loss", "σ/‖μ‖", "ρ*", "dJ/dρ");
    for kind in LossKind::ALL {
        for ratio in [0.25, 0.5, 1.0, 2.0] {
            let model = GaussianFoldedModel::axis_aligned(5, 1.0, ratio)?;
            let rho = minimizer_rho_star(kind, &model)?;
            let slope = ray_derivative(kind, rho, 1.0, ratio, &quad)?;
            println!("{:>8} {ratio:>6} {rho:>14.8} {slope:>12.2e}", kind.name());
        }
    }
    let w = hinge_w(1.0, 0.5);
    println!("hinge w(‖μ‖=1, σ=0.5) = {w:.12}, residual {:.1e}", hinge_relation_residual(w, 1.0, 0.5));
    Ok(())
}
