//! Command line driver: launch, resume, post-evaluate and export seeded
//! evolution experiments described by a JSON config.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use swarmevo::experiment::{
    export, load_manifest, post_evaluate_experiment, run_experiment, ExperimentConfig,
    ExportKind,
};
use swarmevo::{Error, Result};

#[derive(Parser)]
#[command(name = "swarmevo", version, about = "Evolve swarm robot controllers")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run every configured evolutionary run of an experiment.
    Evolve {
        /// Experiment config, JSON.
        config: PathBuf,
    },
    /// Continue an interrupted experiment from its output directory.
    Resume {
        /// Output directory of a previously started experiment.
        dir: PathBuf,
    },
    /// Post-evaluate the best champion of each completed run.
    Posteval {
        dir: PathBuf,
    },
    /// Write an analysis artifact from a completed experiment.
    Export {
        dir: PathBuf,
        /// One of: trajectories, trajectory-curves, som, density, complexity.
        what: String,
    },
    /// Parse and validate a config without running anything.
    Validate {
        config: PathBuf,
    },
}

fn configure_workers() -> Result<()> {
    let Ok(value) = std::env::var("SWARMEVO_WORKERS") else {
        return Ok(());
    };
    let workers: usize = value
        .parse()
        .map_err(|_| Error::Config(format!("SWARMEVO_WORKERS must be a number, got '{value}'")))?;
    if workers == 0 {
        return Err(Error::Config("SWARMEVO_WORKERS must be at least 1".into()));
    }
    rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build_global()
        .map_err(|e| Error::Config(format!("worker pool: {e}")))?;
    Ok(())
}

fn run(cli: Cli) -> Result<()> {
    configure_workers()?;
    match cli.command {
        Command::Evolve { config } => {
            let config = ExperimentConfig::load(&config)?;
            let manifest = run_experiment(&config)?;
            println!("{}", serde_json::to_string_pretty(&manifest)?);
        }
        Command::Resume { dir } => {
            let (config, _) = load_manifest(&dir)?;
            let manifest = run_experiment(&config)?;
            println!("{}", serde_json::to_string_pretty(&manifest)?);
        }
        Command::Posteval { dir } => {
            let (config, _) = load_manifest(&dir)?;
            let results = post_evaluate_experiment(&config)?;
            println!("{}", serde_json::to_string_pretty(&results)?);
        }
        Command::Export { dir, what } => {
            let kind: ExportKind = what.parse()?;
            let (config, _) = load_manifest(&dir)?;
            let path = export(&config, kind)?;
            println!("{}", path.display());
        }
        Command::Validate { config } => {
            let config = ExperimentConfig::load(&config)?;
            println!("ok {}", config.config_hash());
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
