use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Context;
use clap::{Parser, Subcommand};
use scalefree_lab::{run_experiment, validate_config, ConfigError, ExperimentConfig};

#[derive(Parser)]
#[command(
    version,
    about = "Run multi-start TSP and extreme-value experiments from a JSON config"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run an experiment and write its output bundle.
    Run {
        #[arg(long)]
        config: PathBuf,
        /// Output directory, overriding the config.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Worker threads.
        #[arg(long)]
        jobs: Option<usize>,
    },
    /// Check a config and report every invalid field.
    Validate {
        #[arg(long)]
        config: PathBuf,
    },
}

const EXIT_CONFIG: u8 = 2;
const EXIT_RUNTIME: u8 = 3;

fn load(path: &PathBuf) -> Result<ExperimentConfig, ExitCode> {
    let text = match std::fs::read_to_string(path) {
        Ok(t) => t,
        Err(e) => {
            eprintln!("error: cannot read {}: {e}", path.display());
            return Err(ExitCode::from(EXIT_CONFIG));
        }
    };
    validate_config(&text).map_err(|e: ConfigError| {
        eprintln!("{e}");
        ExitCode::from(EXIT_CONFIG)
    })
}

fn run(mut config: ExperimentConfig, out: Option<PathBuf>, jobs: Option<usize>) -> anyhow::Result<()> {
    if let Some(dir) = out {
        config.output_dir = dir;
    }
    if let Some(k) = jobs {
        rayon::ThreadPoolBuilder::new()
            .num_threads(k)
            .build_global()
            .context("cannot start the worker pool")?;
    }
    let bundle = run_experiment(&config)?;
    println!("wrote {} files to {}", bundle.files.len(), bundle.dir.display());
    Ok(())
}

fn main() -> ExitCode {
    match Cli::parse().command {
        Command::Validate { config } => match load(&config) {
            Ok(_) => {
                println!("{}: ok", config.display());
                ExitCode::SUCCESS
            }
            Err(code) => code,
        },
        Command::Run { config, out, jobs } => {
            let config = match load(&config) {
                Ok(c) => c,
                Err(code) => return code,
            };
            if jobs == Some(0) {
                eprintln!("error: --jobs must be at least 1");
                return ExitCode::from(EXIT_CONFIG);
            }
            match run(config, out, jobs) {
                Ok(()) => ExitCode::SUCCESS,
                Err(e) => {
                    eprintln!("error: {e:#}");
                    ExitCode::from(EXIT_RUNTIME)
                }
            }
        }
    }
}
