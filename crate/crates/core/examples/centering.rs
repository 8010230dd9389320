//! Estimating the offset and the effective step from 100 samples, on
//! Gaussian and heavy-tailed data.

use sgd_termination::data::{effective_step, estimate_centering, StudentT2Mixture};
use sgd_termination::numerics::RngState;
use sgd_termination::theory::GaussianFoldedModel;

fn main() -> sgd_termination::Result<()> {
    let d = 500;
    let mut rng = RngState::new(2, 0).rng();
    let mut t2 = StudentT2Mixture::new(1.0, d)?;
    let stats = estimate_centering(&mut t2, &mut rng, 100)?;
    println!(
        "t₂: offset[0] = {:.3}, σ̃² = {:.1}, α = {:.3e}",
        stats.offset.as_slice()[0],
        stats.sigma2_tilde,
        effective_step(0.1, stats.sigma2_tilde)?
    );

    // σ̃² should land near σ²d for the Gaussian mixture.
    let sigma = 0.5;
    let model = GaussianFoldedModel::axis_aligned(d, 1.0, sigma)?;
    let mut mixture = sgd_termination::data::GaussianMixture::new(model.mu().scaled(-1.0), model.mu().clone(), sigma)?;
    let stats = estimate_centering(&mut mixture, &mut rng, 100)?;
    println!("gaussian: σ̃² = {:.2} (σ²d = {})", stats.sigma2_tilde, sigma * sigma * d as f64);
    Ok(())
}
