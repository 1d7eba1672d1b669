use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;
use mcdiffusim::{run, ExperimentSpec, Mode, RunOptions};

/// Absorption of molecules by spherical cells: particle simulation, analytic
/// interference models and parameter sweeps.
#[derive(Debug, Parser)]
#[command(name = "mcdiffusim", version)]
struct Cli {
    mode: Mode,
    /// Experiment spec (JSON).
    #[arg(long)]
    spec: PathBuf,
    /// Output root; overrides `output_dir` of the spec.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Overrides the spec seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads (all cores when absent).
    #[arg(long)]
    threads: Option<usize>,
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = Cli::parse();
    let options = RunOptions {
        out: cli.out,
        seed: cli.seed,
        threads: cli.threads,
    };
    let result = ExperimentSpec::load(&cli.spec).and_then(|spec| run(cli.mode, &spec, &options));
    match result {
        Ok(outcome) if outcome.failures > 0 => {
            log::error!(
                "{} sweep point(s) failed, see {}",
                outcome.failures,
                outcome.dir.join("manifest.jsonl").display()
            );
            ExitCode::from(2)
        }
        Ok(outcome) => {
            log::info!("wrote {}", outcome.dir.display());
            ExitCode::SUCCESS
        }
        Err(e) => {
            log::error!("{e}");
            ExitCode::FAILURE
        }
    }
}
