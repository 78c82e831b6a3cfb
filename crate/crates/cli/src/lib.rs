//! Command-line driver: loads a scenario, runs one pipeline stage and writes
//! its artifacts. Outputs depend only on the config and seed, never on the
//! worker count.

pub mod commands;
pub mod config;

use std::path::PathBuf;

use clap::{Parser, Subcommand};
use stackrent::parallel;

pub use config::ScenarioConfig;

#[derive(Debug, Parser)]
#[command(name = "stackrent", version, about = "Battery rental scheduling and pricing for energy communities")]
pub struct Cli {
    /// TOML scenario file; built-in defaults when omitted.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Output directory, overriding `output.dir`.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Seed for synthetic inputs, overriding `synth.seed`.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Worker threads for sweeps.
    #[arg(long, global = true)]
    pub jobs: Option<usize>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Subcommand)]
pub enum Command {
    /// Run every configured controller over the community year.
    SimulateCommunity,
    /// Trade the operator's battery on the day-ahead market.
    SimulateMarket,
    /// Minimum and maximum rental price per capacity.
    PriceRange,
    /// Optimal rented capacity, alone and co-sized with the turbine.
    Size,
    /// Write the synthetic input CSVs.
    GenData,
}

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error(transparent)]
    Core(#[from] stackrent::Error),
    #[error("{path}: {message}")]
    Parse { path: PathBuf, message: String },
    #[error("controller `{name}`: {source}")]
    Controller {
        name: String,
        #[source]
        source: stackrent::Error,
    },
    #[error("{0}")]
    Usage(String),
}

impl CliError {
    /// 2 when an input file is missing, 1 otherwise.
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Core(e) | CliError::Controller { source: e, .. }
                if matches!(e.root(), stackrent::Error::MissingFile(_)) =>
            {
                2
            }
            _ => 1,
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            CliError::Core(e) | CliError::Controller { source: e, .. } => e.kind(),
            CliError::Parse { .. } => "config_parse",
            CliError::Usage(_) => "usage",
        }
    }

    /// One-line JSON object for standard error.
    pub fn to_json(&self) -> String {
        let path = match self {
            CliError::Core(e) | CliError::Controller { source: e, .. } => match e.root() {
                stackrent::Error::MissingFile(p) | stackrent::Error::Io { path: p, .. } => Some(p.clone()),
                stackrent::Error::Load { path, .. } => Some(path.clone()),
                _ => None,
            },
            CliError::Parse { path, .. } => Some(path.clone()),
            CliError::Usage(_) => None,
        };
        serde_json::json!({
            "error": self.kind(),
            "message": self.to_string(),
            "path": path,
            "exit_code": self.exit_code(),
        })
        .to_string()
    }
}

impl CliError {
    /// Writes the JSON error line to standard error and exits.
    pub fn report_and_exit(self) -> ! {
        eprintln!("{}", self.to_json());
        std::process::exit(self.exit_code().into())
    }
}

pub fn run(cli: &Cli) -> Result<(), CliError> {
    let mut cfg = match &cli.config {
        Some(path) => ScenarioConfig::load(path)?,
        None => ScenarioConfig::default(),
    };
    if let Some(seed) = cli.seed {
        cfg.synth.seed = seed;
    }
    if let Some(out) = &cli.out {
        cfg.output.dir = out.clone();
    }
    cfg.validate()?;
    if let Some(jobs) = cli.jobs {
        if jobs == 0 {
            return Err(CliError::Usage("--jobs must be at least 1".into()));
        }
        parallel::set_jobs(jobs);
    }
    commands::dispatch(cli.command, &cfg)
}
