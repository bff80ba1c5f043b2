//! `isa` — simulate, estimate, infer, benchmark, coverage.
//!
//! Exit codes: 0 success, 1 numerical failure, 2 usage error.

mod commands;
mod manifest;

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

use commands::*;

#[derive(Debug)]
pub enum CliError {
    /// Bad flags or unreadable inputs; exit code 2.
    Usage(String),
    /// Numerical or runtime failure; exit code 1.
    Run(String),
}

impl CliError {
    pub fn usage(msg: impl Into<String>) -> Self {
        CliError::Usage(msg.into())
    }
    pub fn internal(msg: impl ToString) -> Self {
        CliError::Run(msg.to_string())
    }
}

impl From<isa_core::IsaError> for CliError {
    fn from(e: isa_core::IsaError) -> Self {
        CliError::Run(e.to_string())
    }
}

#[derive(Parser)]
#[command(
    name = "isa",
    version,
    about = "Sparse cross-group precision estimation and de-biased inference"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a ground-truth model and a Gaussian sample from it.
    Simulate(SimulateArgs),
    /// Fit the penalized estimator on a data file, optionally over a grid.
    Estimate(EstimateArgs),
    /// Split the sample, de-bias, and report intervals and tests per edge.
    Infer(InferArgs),
    /// Support-recovery benchmark over replications.
    Benchmark(BenchmarkArgs),
    /// Confidence-interval coverage study over replications.
    Coverage(CoverageArgs),
    /// Re-run a command from its manifest into a new directory.
    Rerun(RerunArgs),
}

#[derive(Args)]
pub struct SimulateArgs {
    /// Total dimension.
    #[arg(long)]
    d: usize,
    /// Cross-group nonzeros per group pair.
    #[arg(long)]
    s: usize,
    /// Number of groups.
    #[arg(long, default_value_t = 2)]
    l: usize,
    /// Magnitude of the planted cross-group entries.
    #[arg(long, default_value_t = 0.5)]
    value: f64,
    /// Condition number target of the shifted precision; defaults to d.
    #[arg(long)]
    cond: Option<f64>,
    /// Number of sample rows to draw.
    #[arg(long)]
    n: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out_dir: PathBuf,
}

#[derive(Args)]
pub struct EstimateArgs {
    /// Sample CSV, rows are observations.
    #[arg(long)]
    data: PathBuf,
    /// Partition JSON with 1-based groups.
    #[arg(long)]
    partition: PathBuf,
    /// Single penalty level; mutually exclusive with a grid.
    #[arg(long, conflicts_with = "lambda_grid")]
    lambda: Option<f64>,
    /// Comma-separated penalty grid; requires --val-data.
    #[arg(long)]
    lambda_grid: Option<String>,
    /// Validation sample CSV for grid selection. With neither --lambda nor
    /// --lambda-grid, the default 50-point grid is used and this is required.
    #[arg(long)]
    val_data: Option<PathBuf>,
    #[arg(long, default_value_t = 1.0)]
    rho: f64,
    #[arg(long, default_value_t = 1e-4)]
    tol: f64,
    #[arg(long, default_value_t = 2000)]
    max_iters: usize,
    /// Column-center the data before covariance estimation.
    #[arg(long, default_value_t = true, action = clap::ArgAction::Set)]
    center: bool,
    #[arg(long)]
    out_dir: PathBuf,
}

#[derive(Args)]
pub struct InferArgs {
    /// Sample CSV with an even number of rows (split in half).
    #[arg(long)]
    data: PathBuf,
    #[arg(long)]
    partition: PathBuf,
    /// Single penalty level; without it a grid is selected on the split.
    #[arg(long, conflicts_with = "lambda_grid")]
    lambda: Option<f64>,
    /// Comma-separated penalty grid; default is the 50-point grid.
    #[arg(long)]
    lambda_grid: Option<String>,
    /// Row-program budget; defaults to 0.5 sqrt(log d / n).
    #[arg(long)]
    lambda_prime: Option<f64>,
    #[arg(long, default_value_t = 0.05)]
    alpha: f64,
    /// Permute rows before splitting.
    #[arg(long, default_value_t = false)]
    shuffle: bool,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = true, action = clap::ArgAction::Set)]
    center: bool,
    #[arg(long, default_value_t = 1.0)]
    rho: f64,
    #[arg(long, default_value_t = 1e-4)]
    tol: f64,
    #[arg(long, default_value_t = 2000)]
    max_iters: usize,
    /// Also write edges surviving the multiplicity-corrected threshold.
    #[arg(long, default_value_t = false)]
    bonferroni: bool,
    #[arg(long)]
    out_dir: PathBuf,
}

#[derive(Args)]
pub struct BenchmarkArgs {
    #[arg(long)]
    d: usize,
    #[arg(long)]
    s: usize,
    #[arg(long, default_value_t = 2)]
    l: usize,
    #[arg(long, default_value_t = 0.5)]
    value: f64,
    #[arg(long)]
    cond: Option<f64>,
    #[arg(long, default_value_t = 100)]
    n_train: usize,
    #[arg(long, default_value_t = 100)]
    n_val: usize,
    /// Comma-separated grid; default is the 50-point grid for (d, n_train).
    #[arg(long)]
    lambda_grid: Option<String>,
    #[arg(long, default_value_t = 1.0)]
    rho: f64,
    #[arg(long, default_value_t = 1e-4)]
    tol: f64,
    #[arg(long, default_value_t = 2000)]
    max_iters: usize,
    /// Support threshold on the estimate.
    #[arg(long, default_value_t = 1e-4)]
    threshold: f64,
    #[arg(long)]
    reps: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Replication parallelism.
    #[arg(long)]
    jobs: Option<usize>,
    #[arg(long)]
    out_dir: PathBuf,
}

#[derive(Args)]
pub struct CoverageArgs {
    #[arg(long)]
    d: usize,
    #[arg(long)]
    s: usize,
    #[arg(long, default_value_t = 2)]
    l: usize,
    #[arg(long, default_value_t = 0.5)]
    value: f64,
    #[arg(long)]
    cond: Option<f64>,
    /// Samples per half; each replication draws 2n rows.
    #[arg(long, default_value_t = 100)]
    n: usize,
    #[arg(long, default_value_t = 0.05)]
    alpha: f64,
    /// Fixed penalty level; without it a grid is selected per replication.
    #[arg(long, conflicts_with = "lambda_grid")]
    lambda: Option<f64>,
    #[arg(long)]
    lambda_grid: Option<String>,
    #[arg(long)]
    lambda_prime: Option<f64>,
    #[arg(long, default_value_t = 1.0)]
    rho: f64,
    #[arg(long, default_value_t = 1e-4)]
    tol: f64,
    #[arg(long, default_value_t = 2000)]
    max_iters: usize,
    #[arg(long)]
    reps: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    jobs: Option<usize>,
    /// Tracked entries for the standardized-error export, as 1-based "j:k"
    /// pairs separated by commas.
    #[arg(long)]
    tracked: Option<String>,
    #[arg(long)]
    out_dir: PathBuf,
}

#[derive(Args)]
pub struct RerunArgs {
    /// Manifest of a previous run.
    #[arg(long)]
    manifest: PathBuf,
    #[arg(long)]
    out_dir: PathBuf,
}

fn main() {
    let cli = Cli::parse();
    let outcome = match cli.command {
        Command::Simulate(args) => cmd_simulate(args),
        Command::Estimate(args) => cmd_estimate(args),
        Command::Infer(args) => cmd_infer(args),
        Command::Benchmark(args) => cmd_benchmark(args),
        Command::Coverage(args) => cmd_coverage(args),
        Command::Rerun(args) => cmd_rerun(args),
    };
    match outcome {
        Ok(()) => {}
        Err(CliError::Usage(msg)) => {
            eprintln!("error: {msg}");
            std::process::exit(2);
        }
        Err(CliError::Run(msg)) => {
            eprintln!("error: {msg}");
            std::process::exit(1);
        }
    }
}
