//! A reduced accuracy-versus-noise sweep through the experiment API.

use sgd_termination::experiment::{execute, Command, ExperimentConfig};

fn main() -> sgd_termination::Result<()> {
    let config = ExperimentConfig::from_toml_str(
        "seed = 4\ntrials = 3\n[synthetic]\nd = 100\n[sweep]\nsigmas = [0.25, 1.0]\n",
    )?;
    let out = execute(Command::SweepSigma, &config)?;
    print!("{}", String::from_utf8_lossy(&out.bytes));
    Ok(())
}
