//! Command-line front end for sweeps, verification reports and holonomy runs.
//!
//! Exit codes: 0 success, 1 verification breach, 2 bad configuration or
//! input, 3 numerical non-convergence.

pub mod commands;
pub mod config;
pub mod output;

use std::path::PathBuf;

use berry_core::Error as CoreError;
use clap::{Args, Parser, Subcommand};
use thiserror::Error;

use crate::config::{RawSettings, RunConfig};
use crate::output::Outcome;

pub const EXIT_OK: i32 = 0;
pub const EXIT_BREACH: i32 = 1;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_NONCONVERGENCE: i32 = 3;

pub const THREADS_ENV: &str = "BERRY_HOLONOMY_THREADS";

#[derive(Debug, Error)]
pub enum CliError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("i/o error: {0}")]
    Io(String),
    #[error(transparent)]
    Core(#[from] CoreError),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) | CliError::Io(_) => EXIT_CONFIG,
            CliError::Core(CoreError::NotStabilized { .. } | CoreError::NotAntiHermitian { .. }) => EXIT_NONCONVERGENCE,
            CliError::Core(_) => EXIT_CONFIG,
        }
    }
}

#[derive(Debug, Parser)]
#[command(
    name = "berry-holonomy",
    version,
    about = "Adiabatic connections, curvatures and holonomies of the displaced-squeezed vacuum family"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    #[command(flatten)]
    pub common: CommonArgs,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Subcommand)]
pub enum Command {
    /// Tabulate A_λ and A_μ over a grid
    Connection,
    /// Tabulate the six curvature components over a grid
    Curvature,
    /// Run the cross-check suite; exit 1 on any breach
    Verify,
    /// Parallel transport around a loop
    Holonomy,
    /// Holonomy algebra and curvature span dimensions
    Irreducibility,
    /// Characteristic-form traces over a grid
    Chern,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Connection => "connection",
            Command::Curvature => "curvature",
            Command::Verify => "verify",
            Command::Holonomy => "holonomy",
            Command::Irreducibility => "irreducibility",
            Command::Chern => "chern",
        }
    }
}

#[derive(Debug, Clone, Default, Args)]
pub struct CommonArgs {
    /// Degeneracy of the vacuum
    #[arg(long, global = true)]
    pub m: Option<String>,
    /// Truncation dimension, or "auto"
    #[arg(long, global = true)]
    pub dim: Option<String>,
    /// Finite-difference step
    #[arg(long, global = true)]
    pub step: Option<String>,
    /// Richardson-extrapolate finite differences
    #[arg(long, global = true, num_args = 0..=1, default_missing_value = "true")]
    pub richardson: Option<String>,
    /// Transport samples per loop
    #[arg(long, global = true)]
    pub samples: Option<String>,
    /// λ as "re+imi"
    #[arg(long, global = true, allow_hyphen_values = true)]
    pub lambda: Option<String>,
    /// μ as "re+imi"
    #[arg(long, global = true, allow_hyphen_values = true)]
    pub mu: Option<String>,
    /// Grid file (.json or text) or "default"
    #[arg(long, global = true)]
    pub grid: Option<String>,
    /// Output file; stdout when absent
    #[arg(long, global = true)]
    pub out: Option<String>,
    /// json or csv
    #[arg(long, global = true)]
    pub format: Option<String>,
    /// closed or numeric
    #[arg(long, global = true)]
    pub source: Option<String>,
    /// JSON list of path segments
    #[arg(long = "loop", global = true)]
    pub loop_file: Option<String>,
    /// Radius of the default λ-circle
    #[arg(long, global = true)]
    pub radius: Option<String>,
    /// Lie-closure iteration budget
    #[arg(long, global = true)]
    pub budget: Option<String>,
    /// Tolerance override, e.g. connection=1e-7 (repeatable)
    #[arg(long = "tolerance", global = true)]
    pub tolerances: Vec<String>,
    /// Key-value config file; flags take precedence
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Write the payload without the metadata envelope
    #[arg(long, global = true, num_args = 0..=1, default_missing_value = "true")]
    pub payload_only: Option<String>,
}

impl CommonArgs {
    fn raw(&self) -> RawSettings {
        RawSettings {
            m: self.m.clone(),
            dim: self.dim.clone(),
            step: self.step.clone(),
            richardson: self.richardson.clone(),
            samples: self.samples.clone(),
            lambda: self.lambda.clone(),
            mu: self.mu.clone(),
            grid: self.grid.clone(),
            out: self.out.clone(),
            format: self.format.clone(),
            source: self.source.clone(),
            loop_file: self.loop_file.clone(),
            radius: self.radius.clone(),
            budget: self.budget.clone(),
            payload_only: self.payload_only.clone(),
            tolerances: self.tolerances.clone(),
        }
    }

    /// Flags over the config file over defaults.
    pub fn resolve(&self) -> Result<RunConfig, CliError> {
        let raw = match &self.config {
            Some(path) => self.raw().over(RawSettings::load(path)?),
            None => self.raw(),
        };
        RunConfig::from_raw(&raw)
    }
}

pub fn execute(command: Command, cfg: &RunConfig) -> Result<Outcome, CliError> {
    match command {
        Command::Connection => commands::cmd_connection(cfg),
        Command::Curvature => commands::cmd_curvature(cfg),
        Command::Verify => commands::cmd_verify(cfg),
        Command::Holonomy => commands::cmd_holonomy(cfg),
        Command::Irreducibility => commands::cmd_irreducibility(cfg),
        Command::Chern => commands::cmd_chern(cfg),
    }
}

/// Resolve, run and write; returns the process exit code.
pub fn run(cli: &Cli) -> i32 {
    let result = cli.common.resolve().and_then(|cfg| {
        output::check_format(cli.command, &cfg)?;
        let outcome = execute(cli.command, &cfg)?;
        output::emit(cli.command, &cfg, &outcome)?;
        Ok(outcome)
    });
    match result {
        Ok(outcome) => outcome.exit_code,
        Err(e) => {
            eprintln!("berry-holonomy: {e}");
            e.exit_code()
        }
    }
}
