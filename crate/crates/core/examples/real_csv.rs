//! `run-real` on a CSV dataset written to a temporary directory.

use sgd_termination::experiment::{execute, Command, ExperimentConfig, RealDataset};
use sgd_termination::numerics::RngState;

fn write_split(path: &std::path::Path, n: usize, rng: &mut sgd_termination::numerics::Rng) -> std::io::Result<()> {
    let mut text = String::from("x0,x1,x2,label\n");
    for _ in 0..n {
        let y = u8::from(rng.coin());
        let shift = if y == 1 { 1.0 } else { -1.0 };
        let row: Vec<String> = (0..3)
            .map(|j| format!("{:.4}", if j == 0 { shift } else { 0.0 } + 0.8 * rng.standard_normal()))
            .collect();
        text.push_str(&format!("{},{y}\n", row.join(",")));
    }
    std::fs::write(path, text)
}

fn main() -> sgd_termination::Result<()> {
    let dir = std::env::temp_dir().join("sgd-termination-real-csv");
    std::fs::create_dir_all(&dir)?;
    let mut rng = RngState::new(1, 0).rng();
    write_split(&dir.join("train.csv"), 5000, &mut rng)?;
    write_split(&dir.join("test.csv"), 1000, &mut rng)?;

    let mut config = ExperimentConfig::default();
    config.trials = 3;
    config.alpha_tilde = 0.005;
    config.real.dataset = RealDataset::Csv;
    config.real.path = Some(dir.join("train.csv"));
    config.real.test_path = Some(dir.join("test.csv"));
    let out = execute(Command::RunReal, &config)?;
    print!("{}", String::from_utf8_lossy(&out.bytes));
    println!("exit code {}", out.status.exit_code());
    Ok(())
}
