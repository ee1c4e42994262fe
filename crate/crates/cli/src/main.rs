//! Command-line entry point: `cliffvar run <config.json> --out <dir>` and
//! `cliffvar validate <config.json>`. Exit codes: 0 success, 2 config error,
//! 3 runtime error.

use clap::{Parser, Subcommand};
use cliffvar_cli::config::ExperimentConfig;
use cliffvar_cli::experiments;
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser)]
#[command(
    name = "cliffvar",
    version,
    about = "Batch experiments for Clifford-ensemble trainability studies"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run an experiment config; writes CSV tables and summary.json.
    Run {
        /// Experiment config document.
        config: PathBuf,
        /// Output directory, created if missing.
        #[arg(long)]
        out: PathBuf,
        /// Worker threads for sample evaluation (default: all cores).
        #[arg(long)]
        threads: Option<usize>,
        /// Override the config's master seed.
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Parse and validate a config without running it.
    Validate {
        /// Experiment config document.
        config: PathBuf,
    },
}

const CONFIG_ERROR: u8 = 2;
const RUNTIME_ERROR: u8 = 3;

fn main() -> ExitCode {
    match Cli::parse().command {
        Command::Validate { config } => match ExperimentConfig::load(&config) {
            Ok(parsed) => {
                println!("config ok: {}", parsed.name());
                ExitCode::SUCCESS
            }
            Err(e) => {
                eprintln!("error: {e}");
                ExitCode::from(CONFIG_ERROR)
            }
        },
        Command::Run { config, out, threads, seed } => {
            let mut parsed = match ExperimentConfig::load(&config) {
                Ok(parsed) => parsed,
                Err(e) => {
                    eprintln!("error: {e}");
                    return ExitCode::from(CONFIG_ERROR);
                }
            };
            if let Some(seed) = seed {
                parsed.set_seed(seed);
            }
            if let Some(threads) = threads {
                let pool =
                    rayon::ThreadPoolBuilder::new().num_threads(threads).build_global();
                if let Err(e) = pool {
                    eprintln!("error: thread pool: {e}");
                    return ExitCode::from(RUNTIME_ERROR);
                }
            }
            if let Err(e) = std::fs::create_dir_all(&out) {
                eprintln!("error: create {}: {e}", out.display());
                return ExitCode::from(RUNTIME_ERROR);
            }
            match experiments::run(&parsed, &out) {
                Ok(result) => {
                    println!(
                        "{}: {} rows (seed {})",
                        parsed.name(),
                        result.rows,
                        parsed.seed()
                    );
                    for file in &result.files {
                        println!("  {}", out.join(file).display());
                    }
                    ExitCode::SUCCESS
                }
                Err(e) => {
                    eprintln!("error: {e:#}");
                    ExitCode::from(RUNTIME_ERROR)
                }
            }
        }
    }
}
