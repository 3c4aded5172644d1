//! `turnwise`: generate dialogue scripts, run evaluation sessions and score
//! transcripts.
//!
//! Exit codes: 0 success, 2 usage error, 3 data error, 4 transport error.

mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use commands::{ScoreFormat, Status, UsageError};
use config::RunConfig;

#[derive(Debug, Parser)]
#[command(name = "turnwise", version, about = "Multi-turn instruction-following evaluation")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Write one QC-checked script per seed.
    Generate {
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long, default_value_t = 20)]
        turns: u32,
        #[arg(long)]
        out: PathBuf,
    },
    /// Run one evaluation session per seed; existing transcripts are kept.
    Run {
        #[arg(long)]
        config: Option<PathBuf>,
        /// always-pass, always-fail, bernoulli:P[:SEED], pattern:SF... or an [adapters] name.
        #[arg(long)]
        adapter: String,
        #[arg(long)]
        out: PathBuf,
    },
    /// Score a directory of transcripts.
    Score {
        /// Directory holding session-*.jsonl transcripts.
        #[arg(long = "in")]
        input: PathBuf,
        /// Report directory; defaults to the input directory.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Survival curve length; defaults to the sessions' turn cap.
        #[arg(long)]
        cap: Option<u32>,
        #[arg(long, value_enum, default_value = "json")]
        format: ScoreFormat,
    },
    /// Run and score the same cohort under several patience limits.
    Sweep {
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        adapter: String,
        #[arg(long, value_delimiter = ',', default_value = "1,2,3")]
        patience: Vec<u32>,
        #[arg(long)]
        out: PathBuf,
    },
}

fn load(config: &Option<PathBuf>) -> anyhow::Result<RunConfig> {
    match config {
        Some(path) => RunConfig::load(path),
        None => Ok(RunConfig::default()),
    }
}

fn dispatch(command: Command) -> anyhow::Result<Status> {
    match command {
        Command::Generate { config, turns, out } => commands::generate(&load(&config)?, turns, &out),
        Command::Run { config, adapter, out } => commands::run(&load(&config)?, &adapter, &out),
        Command::Score { input, out, cap, format } => commands::score(&input, out.as_deref(), cap, format),
        Command::Sweep { config, adapter, patience, out } => commands::sweep(&load(&config)?, &adapter, &patience, &out),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match dispatch(cli.command) {
        Ok(Status::Success) => ExitCode::SUCCESS,
        Ok(Status::DataError) => ExitCode::from(3),
        Ok(Status::TransportError) => ExitCode::from(4),
        Err(e) => {
            eprintln!("error: {e:#}");
            if e.downcast_ref::<UsageError>().is_some() {
                ExitCode::from(2)
            } else {
                ExitCode::from(3)
            }
        }
    }
}
