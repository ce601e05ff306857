mod commands;
mod config;
mod error;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use config::{FileConfig, Overrides, RunConfig};
use error::CliResult;

/// Multi-beam array synthesis from element generalized scattering matrices.
#[derive(Debug, Parser)]
#[command(name = "gsmarray", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,

    /// Run configuration (TOML).
    #[arg(long, global = true, value_name = "PATH")]
    config: Option<PathBuf>,

    /// Named base configuration; the config file and flags override it.
    #[arg(long, global = true, value_name = "NAME")]
    preset: Option<String>,

    /// Dataset directory.
    #[arg(long, global = true, value_name = "PATH")]
    dataset: Option<PathBuf>,

    /// Checkpoint directory written by `optimize`.
    #[arg(long, global = true, value_name = "PATH")]
    checkpoint: Option<PathBuf>,

    /// Output directory.
    #[arg(long, global = true, value_name = "DIR")]
    out: Option<PathBuf>,

    /// Seed of the initial design point.
    #[arg(long, global = true, value_name = "N")]
    seed: Option<u64>,

    /// DOF sharing: PointSymmetry, EqualElements, EdgeCornerInternal or Alternating.
    #[arg(long, global = true, value_name = "NAME")]
    strategy: Option<String>,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Assemble the toy-model dataset (coupling matrix and modal far fields).
    Preprocess,
    /// Run the staged-penalty optimization.
    Optimize,
    /// Report per-beam metrics of a checkpoint, or the Chebyshev baseline.
    Evaluate {
        /// Report the Dolph–Chebyshev line-array baseline instead of a checkpoint.
        #[arg(long)]
        baseline: bool,
    },
    /// χ sweep and toy-element fit for every class of a checkpoint.
    Realize,
}

fn run(cli: Cli) -> CliResult<()> {
    let file = cli.config.as_deref().map(FileConfig::load).transpose()?;
    let overrides = Overrides {
        preset: cli.preset,
        dataset: cli.dataset,
        out: cli.out,
        checkpoint: cli.checkpoint,
        strategy: cli.strategy,
        seed: cli.seed,
    };
    let cfg = RunConfig::resolve(file, &overrides)?;
    match cli.command {
        Command::Preprocess => commands::preprocess(&cfg),
        Command::Optimize => commands::optimize(&cfg),
        Command::Evaluate { baseline } => commands::evaluate(&cfg, baseline),
        Command::Realize => commands::realize(&cfg),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
