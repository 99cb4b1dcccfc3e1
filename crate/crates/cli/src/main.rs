//! `altbm` — batch experiments on flip-flop approximations of alternating
//! two-dimensional Brownian motions.
//!
//! Usage: `altbm <command> --config <file> [--seed N] [--out DIR] [--workers N]`
//! with commands `simulate`, `generator`, `correlation`, `laplace`,
//! `converge`. Outputs land in the output directory as `manifest.json` plus
//! `<command>.csv` / `.json` / `.svg` per the configured formats. Exit codes:
//! 0 success, 1 invalid configuration or I/O failure, 2 numerical failure.

mod commands;
mod config;
mod output;
mod svg;

use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use altbm_core::Error as CoreError;
use config::{CommandKind, ConfigFile};

#[derive(Parser)]
#[command(
    name = "altbm",
    version,
    about = "Batch experiments on alternating Brownian motion approximations"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate coupled paths and dump them.
    Simulate(RunArgs),
    /// Emit the intensity matrix of the chosen construction.
    Generator(RunArgs),
    /// Analytic correlation curve with a Monte Carlo cross-check.
    Correlation(RunArgs),
    /// Laplace-transformed covariance over a q-grid.
    Laplace(RunArgs),
    /// Epoch-misalignment sweep over a rate list.
    Converge(RunArgs),
}

#[derive(Args)]
struct RunArgs {
    /// JSON configuration file.
    #[arg(long)]
    config: PathBuf,
    /// Overrides the config seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Overrides the config output directory.
    #[arg(long, value_name = "DIR")]
    out: Option<PathBuf>,
    /// Overrides the worker count (0 = all available).
    #[arg(long)]
    workers: Option<usize>,
}

/// CLI failure carrying its exit code and a machine-readable kind.
#[derive(Debug)]
pub struct CliError {
    kind: &'static str,
    message: String,
}

impl CliError {
    pub fn config(message: impl Into<String>) -> Self {
        Self {
            kind: "config",
            message: message.into(),
        }
    }

    pub fn io(message: impl Into<String>) -> Self {
        Self {
            kind: "io",
            message: message.into(),
        }
    }

    pub fn numerical(message: impl Into<String>) -> Self {
        Self {
            kind: "numerical",
            message: message.into(),
        }
    }

    fn exit_code(&self) -> u8 {
        if self.kind == "numerical" {
            2
        } else {
            1
        }
    }
}

impl From<CoreError> for CliError {
    fn from(error: CoreError) -> Self {
        match error {
            CoreError::SingularMatrix { .. }
            | CoreError::InversionDiverged { .. }
            | CoreError::RangeViolation { .. } => CliError::numerical(error.to_string()),
            other => CliError::config(other.to_string()),
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (kind, args) = match &cli.command {
        Command::Simulate(args) => (CommandKind::Simulate, args),
        Command::Generator(args) => (CommandKind::Generator, args),
        Command::Correlation(args) => (CommandKind::Correlation, args),
        Command::Laplace(args) => (CommandKind::Laplace, args),
        Command::Converge(args) => (CommandKind::Converge, args),
    };
    match execute(kind, args) {
        Ok(()) => ExitCode::SUCCESS,
        Err(error) => {
            #[derive(Serialize)]
            struct ErrorBody<'a> {
                kind: &'a str,
                message: &'a str,
            }
            #[derive(Serialize)]
            struct ErrorObject<'a> {
                error: ErrorBody<'a>,
            }
            let body = serde_json::to_string(&ErrorObject {
                error: ErrorBody {
                    kind: error.kind,
                    message: &error.message,
                },
            })
            .unwrap_or_else(|_| format!("{{\"error\":{{\"kind\":\"{}\"}}}}", error.kind));
            eprintln!("{body}");
            ExitCode::from(error.exit_code())
        }
    }
}

fn execute(kind: CommandKind, args: &RunArgs) -> Result<(), CliError> {
    let raw = fs::read_to_string(&args.config)
        .map_err(|e| CliError::config(format!("cannot read {}: {e}", args.config.display())))?;
    let mut file: ConfigFile = serde_json::from_str(&raw)
        .map_err(|e| CliError::config(format!("invalid config JSON: {e}")))?;

    if let Some(seed) = args.seed {
        file.seed = Some(seed);
    }
    if let Some(out) = &args.out {
        file.output_dir = Some(out.display().to_string());
    }
    if let Some(workers) = args.workers {
        file.workers = Some(workers);
    }
    if file.seed.is_none() {
        file.seed = Some(0);
    }

    let plan = file.into_plan(kind)?;
    if plan.workers > 0 {
        rayon::ThreadPoolBuilder::new()
            .num_threads(plan.workers)
            .build_global()
            .map_err(|e| CliError::config(format!("cannot configure worker pool: {e}")))?;
    }
    commands::run(&plan)
}
