//! Command-line front end.
//!
//! Every command prints a summary on stdout. When an output directory is
//! configured (`--out` or `QUTRIT_CHAIN_OUT`) it also writes its artifacts
//! there together with a `<command>.manifest.json`. Failures are reported as
//! a JSON object on stderr.
//!
//! Exit status: 0 on success, 1 when a check ran but did not pass, 2 on
//! errors.

mod commands;
mod manifest;
mod time;

pub use manifest::RunManifest;
pub use time::parse_time;

use std::path::PathBuf;

use clap::{Parser, Subcommand, ValueEnum};

use crate::hamiltonians::{PresetVariant, Table1Op};
use crate::tomography::RecordMode;

#[derive(Debug, Parser)]
#[command(
    name = "qutrit-chain",
    version,
    about = "State transfer, parity spectra and tomography for spin-1 chains"
)]
pub struct Cli {
    /// Directory for CSV/JSON artifacts and run manifests.
    #[arg(long, global = true, env = "QUTRIT_CHAIN_OUT")]
    pub out: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Text,
    Json,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum BasisChoice {
    /// Product basis of all 3^n states.
    Full,
    /// Vacuum plus single excitations (engineered chains only).
    Sigma,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Parity-resolved spectra of the tabulated two-site interactions.
    Spectra {
        #[arg(long, conflicts_with = "all")]
        op: Option<Table1Op>,
        /// Report all five operators (the default).
        #[arg(long)]
        all: bool,
        #[arg(long, value_enum, default_value = "text")]
        format: Format,
    },
    /// Tests whether exp(iHt) of a two-site interaction is SWAP up to phase.
    SwapCheck {
        /// Interaction kind; `h12` is accepted for heisenberg_squared_mix.
        #[arg(long, default_value = "heisenberg_squared_mix")]
        interaction: String,
        #[arg(long, default_value = "pi", value_parser = parse_time)]
        time: f64,
        #[arg(long, default_value_t = 1e-10)]
        tol: f64,
    },
    /// Scans a transfer amplitude <target|U(t)|source> over a time grid.
    Transfer {
        #[arg(long)]
        spec: PathBuf,
        /// Source product state, e.g. `100` or `1m0`.
        #[arg(long)]
        source: String,
        #[arg(long)]
        target: String,
        #[arg(long, default_value = "0", value_parser = parse_time)]
        t_start: f64,
        #[arg(long, default_value = "4pi", value_parser = parse_time)]
        t_stop: f64,
        #[arg(long, default_value = "1e-3", value_parser = parse_time)]
        t_step: f64,
        #[arg(long, value_enum, default_value = "full")]
        basis: BasisChoice,
    },
    /// Qutrit transfer fidelity of a perfect-transfer preset.
    PstCheck {
        #[arg(long)]
        n: usize,
        #[arg(long, default_value = "paper")]
        variant: PresetVariant,
        #[arg(long, default_value = "pi", value_parser = parse_time)]
        time: f64,
    },
    /// End-to-end parameter estimation from synthesized first-site records.
    Tomography {
        /// Hidden chain whose records are synthesized.
        #[arg(long)]
        spec: PathBuf,
        #[arg(long, default_value = "amplitude")]
        mode: RecordMode,
        #[arg(long, default_value = "0.4", value_parser = parse_time)]
        t_step: f64,
        #[arg(long, default_value_t = 200)]
        samples: usize,
        /// Trials per time point; omit for exact records.
        #[arg(long)]
        shots: Option<u64>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// A priori bound on band energies (defaults to a Gershgorin bound).
        #[arg(long)]
        frequency_bound: Option<f64>,
    },
    /// Parses and validates a chain specification.
    Validate {
        #[arg(long)]
        spec: PathBuf,
    },
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Spectra { .. } => "spectra",
            Command::SwapCheck { .. } => "swap-check",
            Command::Transfer { .. } => "transfer",
            Command::PstCheck { .. } => "pst-check",
            Command::Tomography { .. } => "tomography",
            Command::Validate { .. } => "validate",
        }
    }
}

/// Result of a successfully executed command.
#[derive(Debug)]
pub struct Outcome {
    /// Text written to stdout.
    pub stdout: String,
    /// Whether the command's check (if any) passed.
    pub passed: bool,
}

pub const EXIT_PASS: i32 = 0;
pub const EXIT_CHECK_FAILED: i32 = 1;
pub const EXIT_ERROR: i32 = 2;

/// Runs a parsed command line.
pub fn run(cli: &Cli) -> anyhow::Result<Outcome> {
    commands::dispatch(cli)
}

/// Machine-readable error report.
pub fn error_json(command: &str, err: &anyhow::Error) -> String {
    let chain: Vec<String> = err.chain().map(|e| e.to_string()).collect();
    serde_json::json!({
        "error": {
            "command": command,
            "message": err.to_string(),
            "causes": chain,
        }
    })
    .to_string()
}

/// Process entry point; returns the exit status.
pub fn main() -> i32 {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(outcome) => {
            print!("{}", outcome.stdout);
            if outcome.passed {
                EXIT_PASS
            } else {
                EXIT_CHECK_FAILED
            }
        }
        Err(err) => {
            eprintln!("{}", error_json(cli.command.name(), &err));
            EXIT_ERROR
        }
    }
}
