//! The verification suite on a small budget, printed as a table.

use sgd_termination::experiment::{verification_checks, ExperimentConfig};

fn main() -> sgd_termination::Result<()> {
    let mut config = ExperimentConfig::default();
    config.verify.trials = 100;
    config.verify.n_mc = 5_000;
    for c in verification_checks(&config)? {
        println!(
            "{:<45} {:>12.5} {:>12.5e} {}",
            c.check,
            c.value,
            c.bound,
            if c.pass { "PASS" } else { "FAIL" }
        );
    }
    Ok(())
}
