//! Zero-overhead test, SVS and the 1.5k continuation on t₂ data, scored on a
//! streamed validation set.

use sgd_termination::experiment::{execute, Command, ExperimentConfig};

fn main() -> sgd_termination::Result<()> {
    let config = ExperimentConfig::from_toml_str(
        r#"
seed = 8
trials = 2
losses = ["hinge"]
validation_size = 20000
[synthetic]
generator = "student-t2"
d = 50
[compare]
stoppers = ["zero-overhead", "svs-32", "zero-overhead+continue"]
"#,
    )?;
    let out = execute(Command::CompareStoppers, &config)?;
    print!("{}", String::from_utf8_lossy(&out.bytes));
    Ok(())
}
