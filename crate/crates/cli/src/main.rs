use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

mod commands;
mod config;
mod error;
mod output;
mod plot;

/// Random covering of the circle by shrinking arcs: simulation and diagnostics.
#[derive(Debug, Parser)]
#[command(name = "arccover", version)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    /// Experiment JSON (version 1); flags override its fields.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Worker threads; results do not depend on it.
    #[arg(long, global = true, env = "ARCCOVER_JOBS")]
    pub jobs: Option<usize>,
    /// Directory for result files.
    #[arg(long, global = true)]
    pub out_dir: Option<PathBuf>,
    /// File stem for result files (default: the command name).
    #[arg(long, global = true)]
    pub prefix: Option<String>,
}

#[derive(Debug, Args)]
pub struct SimArgs {
    /// circle | cantor:<ratio>:<depth> | points:<p1,p2,...> | custom:<file.json>
    #[arg(long)]
    pub target: Option<String>,
    #[arg(long)]
    pub n_max: Option<u64>,
    #[arg(long)]
    pub checkpoint_ratio: Option<f64>,
    #[arg(long)]
    pub first_checkpoint: Option<u64>,
    /// Start of the eventual-coverage window (default: checkpoint nearest √n_max).
    #[arg(long)]
    pub tail_start: Option<u64>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// One trial: per-checkpoint coverage trace.
    Trial {
        #[command(flatten)]
        sim: SimArgs,
        /// logn:<c> | harmonic:<c> | power:<c>:<gamma> | table:<file>
        #[arg(long)]
        lengths: Option<String>,
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Eventual-coverage fraction against c for lengths c ln n / n.
    Scan {
        #[command(flatten)]
        sim: SimArgs,
        /// lo:hi:step or a comma list.
        #[arg(long = "c")]
        c_grid: Option<String>,
        #[arg(long)]
        trials: Option<u64>,
        #[arg(long)]
        seed0: Option<u64>,
        #[arg(long)]
        tail_checkpoints: Option<usize>,
    },
    /// Box-counting dimension of the uncovered residual.
    Dims {
        #[command(flatten)]
        sim: SimArgs,
        /// One or more c values (lo:hi:step or a comma list).
        #[arg(long = "c")]
        c_grid: Option<String>,
        #[arg(long)]
        trials: Option<u64>,
        #[arg(long)]
        seed0: Option<u64>,
        #[arg(long)]
        tail_checkpoints: Option<usize>,
    },
    /// Partial-sum diagnostics of the threshold and Shepp series.
    Series {
        #[arg(long)]
        lengths: Option<String>,
        #[arg(long)]
        beta: Option<f64>,
        #[arg(long)]
        d: Option<f64>,
        /// Number of terms.
        #[arg(long)]
        n: Option<u64>,
    },
    /// Block schedule pushing D(L′) towards δ.
    Schedule {
        #[arg(long)]
        lengths: Option<String>,
        #[arg(long)]
        alpha: Option<f64>,
        /// Number of blocks.
        #[arg(long)]
        k: Option<usize>,
    },
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Trial { .. } => "trial",
            Command::Scan { .. } => "scan",
            Command::Dims { .. } => "dims",
            Command::Series { .. } => "series",
            Command::Schedule { .. } => "schedule",
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match commands::run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
