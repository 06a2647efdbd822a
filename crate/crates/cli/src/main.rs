use std::path::PathBuf;
use std::process::ExitCode;

use chimera_q::{run, seed_sweep, CliError, Experiment, ExperimentConfig, OUT_ENV};
use clap::Parser;

/// Mean-field runs, fluctuation propagation and figure data for
/// nonlocally coupled oscillator rings.
#[derive(Parser)]
#[command(name = "chimera-q", version)]
struct Cli {
    experiment: Experiment,

    /// JSON experiment configuration.
    #[arg(long)]
    config: PathBuf,

    /// Seed of the generated initial condition.
    #[arg(long)]
    seed: Option<u64>,

    /// Output directory; beats both the config and the environment.
    #[arg(long)]
    out: Option<PathBuf>,

    /// Comma-separated seeds to sweep, each into its own subdirectory.
    #[arg(long, value_delimiter = ',', conflicts_with = "seed")]
    sweep: Vec<u64>,
}

fn execute(cli: &Cli) -> Result<PathBuf, CliError> {
    let mut cfg = ExperimentConfig::load(&cli.config)?;
    if let Some(seed) = cli.seed {
        cfg = cfg.with_seed(seed);
    }
    let out = cli
        .out
        .clone()
        .or_else(|| std::env::var_os(OUT_ENV).map(PathBuf::from))
        .unwrap_or_else(|| cfg.outputs.clone());
    if cli.sweep.is_empty() {
        run(&cfg, cli.experiment, &out)?;
    } else {
        seed_sweep(&cfg, cli.experiment, &cli.sweep, &out)?;
    }
    Ok(out)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(&cli) {
        Ok(out) => {
            println!("{}", out.display());
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("{}", e.to_json());
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
