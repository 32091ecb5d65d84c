//! Command-line front-end: `run` evaluates a scenario config and writes
//! moment trajectories (CSV) plus a JSON summary; `validate` checks a
//! config without running it.
//!
//! Exit codes: 0 success, 1 usage/config error, 2 numeric failure,
//! 3 cross-engine comparison above tolerance.

use std::fmt;
use std::path::PathBuf;

use clap::{Parser, Subcommand};

pub mod config;
pub mod run;

pub use config::{EngineChoice, Scenario, ScenarioConfig};

#[derive(Debug)]
pub enum CliError {
    /// Malformed or inconsistent configuration (exit 1).
    Config(String),
    /// Engine or I/O failure during the run (exit 2).
    Numeric(String),
    /// Cross-engine deviation above the configured tolerance (exit 3).
    Comparison { max_deviation: f64, tolerance: f64 },
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Config(msg) => write!(f, "config error: {msg}"),
            CliError::Numeric(msg) => write!(f, "numeric failure: {msg}"),
            CliError::Comparison {
                max_deviation,
                tolerance,
            } => write!(
                f,
                "comparison failure: max deviation {max_deviation:.6e} exceeds tolerance {tolerance:.1e}"
            ),
        }
    }
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 1,
            CliError::Numeric(_) => 2,
            CliError::Comparison { .. } => 3,
        }
    }
}

#[derive(Parser)]
#[command(
    name = "gausspace",
    version,
    about = "Gaussian phase-space simulation of bosonic quadratic master equations"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a scenario config and write moment trajectories.
    Run {
        /// Path to the scenario JSON document.
        config: PathBuf,
        /// Output directory (overrides the config's `output`).
        #[arg(long)]
        out: Option<PathBuf>,
        /// Engine selection (overrides the config's `engine`).
        #[arg(long, value_enum)]
        engine: Option<EngineChoice>,
    },
    /// Validate a scenario config without running it.
    Validate {
        /// Path to the scenario JSON document.
        config: PathBuf,
    },
}

fn load_config(path: &PathBuf) -> Result<ScenarioConfig, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
}

fn dispatch(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Run {
            config,
            out,
            engine,
        } => {
            let cfg = load_config(&config)?;
            let outcome = run::run(&cfg, out.as_deref(), engine)?;
            println!("wrote {}", outcome.csv_path.display());
            println!("wrote {}", outcome.summary_path.display());
            if let Some(dev) = outcome.max_deviation {
                println!("max cross-engine deviation: {dev:.6e}");
                if !outcome.comparison_ok {
                    return Err(CliError::Comparison {
                        max_deviation: dev,
                        tolerance: cfg.comparison_tolerance,
                    });
                }
            }
            Ok(())
        }
        Command::Validate { config } => {
            let cfg = load_config(&config)?;
            let report = run::validate(&cfg)?;
            println!("{report}");
            Ok(())
        }
    }
}

/// Parses arguments, runs the requested command, and returns the process
/// exit code.
pub fn cli_main() -> i32 {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            // clap handles --help/--version with success exits
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match dispatch(cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("{e}");
            e.exit_code()
        }
    }
}
