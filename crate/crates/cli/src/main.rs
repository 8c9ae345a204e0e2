use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;

use nsp_stab::{exit_code, run, Experiment};

#[derive(Parser)]
#[command(name = "nsp-stab", version, about = "Steady states, decay runs and diagnostics for the Navier-Stokes-Poisson perturbation system")]
struct Cli {
    experiment: Experiment,
    /// JSON run configuration.
    #[arg(long)]
    config: PathBuf,
    /// Output directory; overrides the config.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Random seed; overrides the config.
    #[arg(long)]
    seed: Option<u64>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = run(cli.experiment, &cli.config, cli.out.as_deref(), cli.seed);
    if let Err(e) = &result {
        eprintln!("nsp-stab {}: {e}", cli.experiment.name());
    }
    ExitCode::from(exit_code(&result))
}
