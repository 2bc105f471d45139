//! Command-line driver for the Blochnium JPA simulator.
//!
//! `bjpa <command> --config <path>` reads one JSON configuration, runs the
//! requested pipeline and writes CSV, JSON and SVG artifacts next to a
//! `manifest.json`.

pub mod commands;
pub mod config;
pub mod output;
pub mod svg;

use std::path::PathBuf;

use clap::{Parser, ValueEnum};
use thiserror::Error;

use crate::config::{Format, RunConfig};
use crate::output::{RunInfo, Written};

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),
    #[error(transparent)]
    Compute(#[from] bjpa_core::Error),
    #[error("i/o error: {0}")]
    Io(String),
}

impl CliError {
    /// 2 for configuration and validation problems, 1 for everything else.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Compute(e) if e.is_config_error() => 2,
            CliError::Compute(_) | CliError::Io(_) => 1,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Command {
    /// Effective frequency, Kerr coefficient and charging energy.
    Model,
    /// Steady-state photon-number roots over a (δ, ζ) grid.
    PhotonNumber,
    /// Signal and idler gain maps.
    Gain,
    /// Input 1 dB compression point.
    P1db,
    /// Flux tuning across a frequency band.
    Tune,
    /// Matched-gain compression of two designs.
    Compare,
    /// Compression-point design search.
    Optimize,
    /// Cartesian parameter sweep.
    Sweep,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Model => "model",
            Command::PhotonNumber => "photon-number",
            Command::Gain => "gain",
            Command::P1db => "p1db",
            Command::Tune => "tune",
            Command::Compare => "compare",
            Command::Optimize => "optimize",
            Command::Sweep => "sweep",
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "bjpa", version, about = "Blochnium Josephson parametric amplifier simulator")]
pub struct Args {
    pub command: Command,
    /// JSON run configuration.
    #[arg(long)]
    pub config: PathBuf,
    /// Output directory; overrides `output.directory`.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Comma-separated subset of csv,json,svg; overrides `output.formats`.
    #[arg(long)]
    pub formats: Option<String>,
    /// Worker threads (default: available parallelism).
    #[arg(long)]
    pub workers: Option<usize>,
    /// Seed for randomized stages; overrides `optimize.seed`.
    #[arg(long)]
    pub seed: Option<u64>,
}

pub fn run(args: &Args) -> Result<Written, CliError> {
    let (cfg, bytes) = RunConfig::load(&args.config)?;
    let cfg = cfg.prepare()?;
    let formats = match &args.formats {
        Some(s) => Format::parse_list(s)?,
        None => cfg.output.formats.clone(),
    };
    let dir = args.out.clone().unwrap_or_else(|| cfg.output.directory.clone());
    let workers = match args.workers {
        Some(0) => return Err(CliError::Config("--workers: must be at least 1".into())),
        Some(n) => n,
        None => std::thread::available_parallelism().map_or(1, |n| n.get()),
    };
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| CliError::Io(format!("cannot start worker pool: {e}")))?;
    let report = pool.install(|| commands::dispatch(args.command, &cfg, args.seed))?;
    output::write_all(
        &dir,
        &formats,
        &report,
        &RunInfo {
            command: args.command.name(),
            config_path: &args.config,
            config_bytes: &bytes,
            workers,
            seed: args.seed.or(cfg.optimize.as_ref().map(|o| o.seed)),
        },
    )
}
