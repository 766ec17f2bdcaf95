use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use hetqfl_cli::compare::compare;
use hetqfl_cli::{run, ExperimentConfig};
use hetqfl_core::fed::Algorithm;

#[derive(Parser)]
#[command(name = "hetqfl", version, about = "Heterogeneous quantum federated learning experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run an experiment described by a TOML config.
    Run {
        #[arg(long)]
        config: PathBuf,
        /// Run this single seed instead of the configured list.
        #[arg(long)]
        seed: Option<u64>,
        /// Output directory (overrides `output_dir`).
        #[arg(long)]
        out: Option<PathBuf>,
        /// Run only this algorithm.
        #[arg(long)]
        algo: Option<String>,
        #[arg(long)]
        quiet: bool,
    },
    /// Compare completed runs: mean curves and final-round deltas.
    Compare {
        #[arg(required = true, num_args = 2..)]
        dirs: Vec<PathBuf>,
        /// Where to write curves.csv and deltas.csv.
        #[arg(long, default_value = "comparison")]
        out: PathBuf,
    },
}

fn main() -> ExitCode {
    match Cli::parse().command {
        Command::Run {
            config,
            seed,
            out,
            algo,
            quiet,
        } => {
            let mut cfg = match ExperimentConfig::load(&config) {
                Ok(c) => c,
                Err(e) => {
                    eprintln!("config error: {e}");
                    return ExitCode::from(1);
                }
            };
            if let Some(s) = seed {
                cfg.seeds = vec![s];
            }
            if let Some(name) = algo {
                match Algorithm::from_name(&name) {
                    Some(a) => cfg.algorithms = vec![a],
                    None => {
                        eprintln!("config error: unknown algorithm {name:?}");
                        return ExitCode::from(1);
                    }
                }
            }
            let out = out.unwrap_or_else(|| cfg.output_dir.clone());
            match run(&cfg, &out, quiet) {
                Ok(_) => ExitCode::SUCCESS,
                Err(e) => {
                    eprintln!("error: {e}");
                    ExitCode::from(e.exit_code() as u8)
                }
            }
        }
        Command::Compare { dirs, out } => {
            let result = compare(&dirs).and_then(|c| c.write(&out).map(|_| c));
            match result {
                Ok(c) => {
                    if c.truncated {
                        eprintln!("warning: round counts differ; truncated to {} rounds", c.rounds);
                    }
                    print!("{}", c.table());
                    ExitCode::SUCCESS
                }
                Err(e) => {
                    eprintln!("error: {e}");
                    ExitCode::from(2)
                }
            }
        }
    }
}
