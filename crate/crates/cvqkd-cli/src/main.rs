//! Reproducibility front end for the simulation library: run frames, price
//! key rates, and move traces and symbol files in bit-exact formats.

mod commands;
mod config;
mod metrics;
mod tracefile;

use std::fmt;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

/// Errors carrying their process exit code: 2 usage/config, 3 I/O,
/// 4 pipeline failure beyond the drop tolerance.
#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Io(String),
    Pipeline(String),
}

impl CliError {
    pub fn usage(msg: impl Into<String>) -> Self {
        CliError::Usage(msg.into())
    }

    pub fn io(msg: impl Into<String>) -> Self {
        CliError::Io(msg.into())
    }

    pub fn pipeline(msg: impl Into<String>) -> Self {
        CliError::Pipeline(msg.into())
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Io(_) => 3,
            CliError::Pipeline(_) => 4,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Usage(m) | CliError::Io(m) | CliError::Pipeline(m) => f.write_str(m),
        }
    }
}

#[derive(Parser, Debug)]
#[command(
    name = "cvqkd",
    version,
    about = "Desk-scale CV-QKD link simulator",
    subcommand_required = true
)]
pub struct Cli {
    /// JSON run configuration (defaults apply when omitted).
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Override the configured RNG seed.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Override the configured frame count.
    #[arg(long, global = true)]
    pub frames: Option<u64>,
    /// Override the configured output directory.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Worker threads for frame processing (0 = one per core).
    #[arg(long, global = true, default_value_t = 0)]
    pub jobs: usize,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Simulate frames end to end; write per-frame metrics CSV and a
    /// summary JSON.
    Run,
    /// Evaluate the asymptotic key-rate bound and print it as JSON.
    Keyrate(KeyrateArgs),
    /// Generate or inspect bit-exact trace files.
    Traces {
        #[command(subcommand)]
        action: TracesAction,
    },
    /// Run reconciliation over a stored symbol-pair CSV.
    Reconcile(ReconcileArgs),
}

#[derive(Args, Debug)]
pub struct KeyrateArgs {
    /// Modulation variance per quadrature, SNU.
    #[arg(long)]
    pub v_mod: Option<f64>,
    /// Channel transmittance.
    #[arg(long)]
    pub eta: Option<f64>,
    /// Detection efficiency.
    #[arg(long)]
    pub tau: Option<f64>,
    /// Trusted electronic noise, SNU.
    #[arg(long)]
    pub t: Option<f64>,
    /// Untrusted excess noise at channel output, SNU.
    #[arg(long)]
    pub xi: Option<f64>,
    /// Reconciliation efficiency.
    #[arg(long)]
    pub beta: Option<f64>,
    /// Frame error rate.
    #[arg(long)]
    pub fer: Option<f64>,
    /// Symbol rate, Hz.
    #[arg(long)]
    pub baud: Option<f64>,
    /// Sweep transmittance over `start:stop:steps` and emit a CSV of
    /// (eta, key_fraction_bits) instead of a single evaluation.
    #[arg(long, value_name = "START:STOP:STEPS")]
    pub sweep_eta: Option<String>,
}

#[derive(Subcommand, Debug)]
pub enum TracesAction {
    /// Simulate one frame and write its three detector traces.
    Gen {
        /// Frame index to generate.
        #[arg(long, default_value_t = 0)]
        frame: u64,
    },
    /// Print a trace file's header and basic statistics as JSON.
    Info { file: PathBuf },
}

#[derive(Args, Debug)]
pub struct ReconcileArgs {
    /// Symbol pair CSV with header tx_re,tx_im,rx_re,rx_im.
    #[arg(long)]
    pub input: PathBuf,
    /// Parity-check matrix in alist format (embedded rate-1/2 code when
    /// omitted).
    #[arg(long)]
    pub alist: Option<PathBuf>,
    /// Rotation dimension (1, 2, 4, or 8).
    #[arg(long)]
    pub dimension: Option<usize>,
}

fn main() {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("CVQKD_LOG", "warn")).init();
    let cli = Cli::parse();
    if let Err(e) = commands::dispatch(cli) {
        eprintln!("error: {e}");
        std::process::exit(e.exit_code());
    }
}
