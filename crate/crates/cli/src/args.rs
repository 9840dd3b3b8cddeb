use std::path::PathBuf;

use clap::{ArgGroup, Args, Parser, Subcommand};
use rsh_lab::{Algorithm, Builtin, CertifyMode, Init};

/// Exact analysis and simulation of randomised search heuristics modelled
/// as absorbing Markov chains.
#[derive(Debug, Parser)]
#[command(name = "rsh-lab", version)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Convergence verdict, hitting times and rate bounds; writes
    /// report.json and rate_bounds.csv.
    Analyze(AnalyzeArgs),
    /// Seeded Monte Carlo runs; writes curve.csv, rate.csv and tau.csv.
    Simulate(SimulateArgs),
    /// Certifies a drift function; writes drift_report.json.
    Drift(DriftArgs),
    /// Re-runs the reference experiments; writes reproduction.md.
    Reproduce(ReproduceArgs),
}

#[derive(Debug, Args)]
#[group(skip)]
#[command(group(ArgGroup::new("source").required(true).multiple(false)))]
pub struct ProblemArgs {
    /// Built-in fitness function: square, square10 or shifted_square.
    #[arg(long, group = "source", value_name = "NAME")]
    pub builtin: Option<Builtin>,

    /// JSON problem definition file.
    #[arg(long, group = "source", value_name = "FILE")]
    pub problem: Option<PathBuf>,

    /// Heuristic: rsh1 (elitist) or rsh2 (non-elitist).
    #[arg(long, default_value = "rsh1", value_name = "rsh1|rsh2")]
    pub algo: Algorithm,
}

#[derive(Debug, Args)]
pub struct AnalyzeArgs {
    #[command(flatten)]
    pub problem: ProblemArgs,

    /// Initial state for the mean hitting time and the rate bounds.
    #[arg(long, default_value = "20", value_name = "N|uniform")]
    pub init: Init,

    /// Require hitting times; a non-convergent chain then exits with 2.
    #[arg(long)]
    pub hitting: bool,

    /// Largest iteration of the rate-bound grid.
    #[arg(long, default_value_t = 10_000, value_name = "T")]
    pub rate_horizon: u64,

    #[arg(long, default_value = ".", value_name = "DIR")]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    #[command(flatten)]
    pub problem: ProblemArgs,

    #[arg(long, default_value = "20", value_name = "N|uniform")]
    pub init: Init,

    #[arg(long, default_value_t = 100_000, value_name = "K")]
    pub runs: u64,

    #[arg(long, default_value_t = 0, value_name = "S")]
    pub seed: u64,

    /// Iteration budget per run; runs still non-optimal are censored.
    #[arg(long, default_value_t = 1_000_000, value_name = "T")]
    pub max_iter: u64,

    /// Record the curve every R iterations.
    #[arg(long, default_value_t = 100, value_name = "R")]
    pub stride: u64,

    #[arg(long, default_value = ".", value_name = "DIR")]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct DriftArgs {
    #[command(flatten)]
    pub problem: ProblemArgs,

    /// JSON file `{"d": [...]}` with one value per non-optimal state, in
    /// ascending state order.
    #[arg(long, value_name = "FILE")]
    pub drift: PathBuf,

    /// avg_upper, avg_lower, pointwise_upper, pointwise_lower,
    /// backward_upper or backward_lower.
    #[arg(long, value_name = "MODE")]
    pub mode: CertifyMode,

    /// Initial distribution for the bound and the average drift.
    #[arg(long, default_value = "uniform", value_name = "N|uniform")]
    pub init: Init,

    /// Last iteration examined by the average-drift modes.
    #[arg(long, default_value_t = 100_000, value_name = "T")]
    pub max_iter: u64,

    #[arg(long, default_value = ".", value_name = "DIR")]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct ReproduceArgs {
    /// Comma-separated groups to run: spectral, convergence, hitting,
    /// drift, simulation, trap, rate.
    #[arg(long, value_name = "FILTER", value_delimiter = ',')]
    pub only: Vec<String>,

    #[arg(long, default_value_t = 0, value_name = "S")]
    pub seed: u64,

    /// Runs per simulated experiment.
    #[arg(long, default_value_t = 100_000, value_name = "K")]
    pub runs: u64,

    #[arg(long, default_value = ".", value_name = "DIR")]
    pub out: PathBuf,
}
