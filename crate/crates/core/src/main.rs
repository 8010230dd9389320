use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use sgd_termination::experiment::{apply_overrides, error_exit_code, execute, Command, ExperimentConfig};

#[derive(Parser)]
#[command(name = "sgd-termination", version, about = "Constant step-size SGD with termination tests")]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Accuracy of the stopped iterate across noise levels (CSV).
    SweepSigma(Flags),
    /// Stopping rules side by side on one data source (CSV).
    CompareStoppers(Flags),
    /// Monte-Carlo checks of the stopping-time bounds (JSON).
    VerifyBounds(Flags),
    /// Stopping rules on MNIST, CIFAR-10 or CSV data (CSV).
    RunReal(Flags),
}

#[derive(clap::Args)]
struct Flags {
    /// TOML experiment config; defaults apply when omitted.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    /// Output file; stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    trials: Option<usize>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (command, flags) = match cli.command {
        Cmd::SweepSigma(f) => (Command::SweepSigma, f),
        Cmd::CompareStoppers(f) => (Command::CompareStoppers, f),
        Cmd::VerifyBounds(f) => (Command::VerifyBounds, f),
        Cmd::RunReal(f) => (Command::RunReal, f),
    };
    ExitCode::from(run(command, flags) as u8)
}

fn run(command: Command, flags: Flags) -> i32 {
    let config = match &flags.config {
        Some(p) => ExperimentConfig::from_path(p),
        None => Ok(ExperimentConfig::default()),
    };
    let mut config = match config {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e}");
            return error_exit_code(&e);
        }
    };
    apply_overrides(&mut config, command, flags.seed, flags.trials);
    let output = match execute(command, &config) {
        Ok(o) => o,
        Err(e) => {
            eprintln!("error: {} failed: {e}", command.name());
            return error_exit_code(&e);
        }
    };
    let written = match &flags.out {
        Some(p) => std::fs::write(p, &output.bytes),
        None => std::io::stdout().write_all(&output.bytes),
    };
    if let Err(e) = written {
        eprintln!("error: cannot write output: {e}");
        return 1;
    }
    output.status.exit_code()
}
