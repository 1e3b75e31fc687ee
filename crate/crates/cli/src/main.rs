use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use serde_json::json;

use mecpart_cli::config::{ExperimentConfig, SolverKind};
use mecpart_cli::error::{CliError, Result};
use mecpart_cli::oracle::run_oracle;
use mecpart_cli::{replay, run_experiment, write_report};

#[derive(Parser)]
#[command(
    name = "mecpart",
    version,
    about = "Partitioned task offloading experiments"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the sweep described by a config file.
    Run {
        config: PathBuf,
        /// Base workload seed.
        #[arg(long)]
        seed: Option<u64>,
        /// Output directory.
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, value_delimiter = ',')]
        solvers: Option<Vec<SolverKind>>,
        #[arg(long = "ue-counts", value_delimiter = ',')]
        ue_counts: Option<Vec<u32>>,
    },
    /// Re-run the experiment recorded in a manifest.
    Replay {
        manifest: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Enumerate every decision of a small instance.
    Oracle { instance: PathBuf },
}

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| CliError::io(path, e))
}

fn execute(cli: Cli) -> Result<serde_json::Value> {
    match cli.command {
        Command::Run {
            config,
            seed,
            out,
            solvers,
            ue_counts,
        } => {
            let mut cfg = ExperimentConfig::from_toml(&read(&config)?)?;
            if let Some(seed) = seed {
                cfg.seed = seed;
            }
            if let Some(out) = out {
                cfg.output_dir = out;
            }
            if let Some(solvers) = solvers {
                cfg.solvers = solvers;
            }
            if let Some(ue_counts) = ue_counts {
                cfg.ue_counts = ue_counts;
            }
            let report = run_experiment(&cfg)?;
            write_report(&report, &cfg.output_dir)?;
            Ok(
                json!({ "output_dir": cfg.output_dir, "runs": report.runs.len(), "points": report.summary.len() }),
            )
        }
        Command::Replay { manifest, out } => {
            let text = read(&manifest)?;
            let dir = match out {
                Some(dir) => dir,
                None => mecpart_cli::Manifest::from_toml(&text)?.config.output_dir,
            };
            let report = replay(&text, &dir)?;
            Ok(
                json!({ "output_dir": dir, "runs": report.runs.len(), "points": report.summary.len() }),
            )
        }
        Command::Oracle { instance } => run_oracle(&read(&instance)?),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => {
            // --help and --version
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            let message = e.to_string();
            let first = message.lines().next().unwrap_or_default();
            eprintln!(
                "{}",
                CliError::Usage(first.trim_start_matches("error: ").to_string()).to_json_line()
            );
            return ExitCode::from(2);
        }
    };
    match execute(cli) {
        Ok(value) => {
            println!("{value}");
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("{}", e.to_json_line());
            ExitCode::FAILURE
        }
    }
}
