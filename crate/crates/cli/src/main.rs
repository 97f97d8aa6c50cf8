//! `resqec`: run simulations, sweeps, basin analyses, gap estimates and
//! comparisons from TOML experiment files.
//!
//! Exit codes: 0 success, 2 configuration error, 3 runtime failure.

mod commands;
mod config;
mod svg;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use commands::Common;
use config::ExperimentConfig;

#[derive(Debug)]
pub enum CliError {
    Config(String),
    Runtime(String),
}

impl CliError {
    fn code(&self) -> u8 {
        match self {
            Self::Config(_) => 2,
            Self::Runtime(_) => 3,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Self::Config(m) => write!(f, "configuration error: {m}"),
            Self::Runtime(m) => write!(f, "runtime error: {m}"),
        }
    }
}

#[derive(Parser, Debug)]
#[command(name = "resqec", version, about = "Autonomous bit-flip correction by engineered dissipation")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug, Clone)]
struct Flags {
    /// Output directory (overrides `output_dir`).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Trajectory seed (overrides `trajectories.seed`).
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads for sweeps, comparisons and trajectory ensembles.
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Write SVG plots (default).
    #[arg(long, global = true, overrides_with = "no_svg")]
    svg: bool,
    /// Skip SVG plots.
    #[arg(long = "no-svg", global = true)]
    no_svg: bool,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Propagate one experiment and write timeseries.csv.
    Simulate {
        #[arg(long)]
        config: PathBuf,
        #[command(flatten)]
        flags: Flags,
    },
    /// Repeat an experiment over values of one parameter; writes sweep.csv.
    Sweep {
        #[arg(long)]
        config: PathBuf,
        /// Parameter name, e.g. omega_p.
        #[arg(long)]
        param: Option<String>,
        /// Comma-separated values.
        #[arg(long, value_delimiter = ',')]
        values: Option<Vec<f64>>,
        #[command(flatten)]
        flags: Flags,
    },
    /// Classify the basins of the classical jump chain; writes basins.csv.
    Basins {
        #[arg(long)]
        config: PathBuf,
        #[command(flatten)]
        flags: Flags,
    },
    /// Estimate the Liouvillian spectral gap.
    Gap {
        #[arg(long)]
        config: PathBuf,
        #[command(flatten)]
        flags: Flags,
    },
    /// Overlay the first observable of several experiments.
    Compare {
        #[arg(long = "config", required = true, num_args = 1..)]
        configs: Vec<PathBuf>,
        #[command(flatten)]
        flags: Flags,
    },
}

fn common(flags: &Flags) -> Result<Common, CliError> {
    if let Some(n) = flags.threads {
        if n == 0 {
            return Err(CliError::Config("--threads must be ≥ 1".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| CliError::Runtime(format!("thread pool: {e}")))?;
    }
    Ok(Common { out: flags.out.clone(), seed: flags.seed, svg: !flags.no_svg || flags.svg })
}

fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Simulate { config, flags } => commands::simulate(&ExperimentConfig::load(&config)?, &common(&flags)?),
        Command::Sweep { config, param, values, flags } => {
            commands::sweep(&ExperimentConfig::load(&config)?, &common(&flags)?, param, values)
        }
        Command::Basins { config, flags } => commands::basins(&ExperimentConfig::load(&config)?, &common(&flags)?),
        Command::Gap { config, flags } => commands::gap(&ExperimentConfig::load(&config)?, &common(&flags)?),
        Command::Compare { configs, flags } => commands::compare(&configs, &common(&flags)?),
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("{e}");
            ExitCode::from(e.code())
        }
    }
}
