//! `bwflow`: dataset generation, interpolation sweeps, distances and sampling.
//!
//! Exit codes: 0 on success, 2 for malformed input or configuration, 3 when a
//! mathematical precondition fails (for example a disconnected graph at ν = 0).

mod commands;
mod manifest;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use bwflow_core::interp::SchemeKind;
use bwflow_core::stats::Validity;
use bwflow_core::BwError;

#[derive(Parser)]
#[command(
    name = "bwflow",
    version,
    about = "Bures-Wasserstein flow matching for graphs"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate train/test splits from a dataset manifest.
    Generate(GenerateArgs),
    /// Sweep an interpolation path between two graphs (or two batches).
    Interpolate(InterpolateArgs),
    /// Run the flow sampler with a kNN or oracle denoiser.
    Sample(SampleArgs),
    /// Bures-Wasserstein distance between two graphs.
    Distance(DistanceArgs),
}

#[derive(Args)]
pub struct GenerateArgs {
    pub manifest: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Args)]
pub struct InterpolateArgs {
    pub g0: PathBuf,
    pub g1: PathBuf,
    #[arg(long, default_value = "bw", value_parser = parse_scheme)]
    pub scheme: SchemeKind,
    #[arg(long, default_value_t = 11)]
    pub steps: usize,
    #[arg(long)]
    pub out: PathBuf,
    /// Graph set to compute statistic ratios against.
    #[arg(long)]
    pub test: Option<PathBuf>,
    #[arg(long, default_value_t = 0.0)]
    pub nu: f64,
    #[arg(long, default_value_t = 1.0)]
    pub beta: f64,
    /// Eigenvalue floor of the geometric and harmonic schemes.
    #[arg(long, default_value_t = 1e-6)]
    pub eps: f64,
}

#[derive(Args)]
pub struct SampleArgs {
    /// Flow config (TOML or JSON).
    pub config: PathBuf,
    /// Training graphs for the kNN denoiser and the reference distribution.
    pub train: PathBuf,
    #[arg(long)]
    pub count: usize,
    #[arg(long)]
    pub out: PathBuf,
    /// Target graph for the oracle denoiser.
    #[arg(long)]
    pub target: Option<PathBuf>,
    /// Test graphs for the A.Ratio report.
    #[arg(long)]
    pub test: Option<PathBuf>,
    #[arg(long, default_value = "always_true", value_parser = parse_validity)]
    pub validity: Validity,
}

#[derive(Args)]
pub struct DistanceArgs {
    pub g0: PathBuf,
    pub g1: PathBuf,
    #[arg(long, default_value_t = 1.0)]
    pub beta: f64,
    #[arg(long, default_value_t = 0.0)]
    pub nu: f64,
    /// Print JSON instead of text.
    #[arg(long)]
    pub json: bool,
    /// Also write distance.json and the run manifest here.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

fn parse_scheme(s: &str) -> Result<SchemeKind, String> {
    s.parse().map_err(|e: BwError| e.to_string())
}

fn parse_validity(s: &str) -> Result<Validity, String> {
    serde_json::from_value(serde_json::Value::String(s.to_string()))
        .map_err(|_| format!("unknown validity '{s}' (is_connected, is_tree, always_true)"))
}

#[derive(Debug)]
pub enum CliError {
    Input(String),
    Core(BwError),
}

impl From<BwError> for CliError {
    fn from(e: BwError) -> Self {
        CliError::Core(e)
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Core(BwError::from(e))
    }
}

impl From<serde_json::Error> for CliError {
    fn from(e: serde_json::Error) -> Self {
        CliError::Core(BwError::from(e))
    }
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Core(e) if e.is_precondition_violation() => 3,
            _ => 2,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Input(msg) => f.write_str(msg),
            CliError::Core(e) => write!(f, "{e}"),
        }
    }
}

fn configure_threads() -> Result<(), CliError> {
    let Ok(value) = std::env::var("BWFLOW_THREADS") else {
        return Ok(());
    };
    let threads: usize = value.parse().ok().filter(|&t| t > 0).ok_or_else(|| {
        CliError::Input(format!(
            "BWFLOW_THREADS must be a positive integer, got '{value}'"
        ))
    })?;
    bwflow_core::exec::init_thread_pool(threads).map_err(CliError::Input)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = configure_threads().and_then(|()| match &cli.command {
        Command::Generate(a) => commands::generate(a),
        Command::Interpolate(a) => commands::interpolate(a),
        Command::Sample(a) => commands::sample(a),
        Command::Distance(a) => commands::distance(a),
    });
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("bwflow: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
