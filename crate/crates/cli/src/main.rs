//! `pep`: batch front end for PEP variable selection.
//!
//! Exit codes: 0 success, 2 malformed input, 3 configuration violation,
//! 4 numerical failure.

mod commands;
mod error;
mod io;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Debug, Parser)]
#[command(name = "pep", version, about = "Power-expected-posterior variable selection for linear regression")]
pub struct Cli {
    /// Master seed; falls back to PEP_SEED, then 0.
    #[arg(long, env = "PEP_SEED", default_value_t = 0, global = true)]
    pub seed: u64,
    /// Worker threads (defaults to all cores). Results do not depend on it.
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Search the model space and report posterior model and inclusion probabilities.
    Select(SelectArgs),
    /// Estimate the log marginal likelihood of one model.
    Marginal(MarginalArgs),
    /// Draw from the posterior of one model.
    Sample(SampleArgs),
    /// Generate a synthetic dataset.
    Simulate(SimulateArgs),
    /// Split-half predictive RMSE of one model.
    Rmse(RmseArgs),
    /// Inclusion probabilities across training sample sizes.
    Sensitivity(SensitivityArgs),
    /// Bayes factor against BIC as the sample size grows.
    Consistency(ConsistencyArgs),
}

#[derive(Debug, Args, Clone)]
pub struct DataArgs {
    /// CSV file with a header row.
    #[arg(long)]
    pub input: PathBuf,
    /// Response column.
    #[arg(long, default_value = "y")]
    pub response: String,
    /// Comma-separated covariate columns (default: all other columns).
    #[arg(long, value_delimiter = ',')]
    pub covariates: Option<Vec<String>>,
    /// Center and scale covariates to unit standard deviation.
    #[arg(long)]
    pub standardize: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum BaselineArg {
    Zpep,
    Jpep,
}

#[derive(Debug, Args, Clone)]
pub struct PriorArgs {
    #[arg(long, value_enum, default_value_t = BaselineArg::Zpep)]
    pub baseline: BaselineArg,
    /// Power parameter (default: n*).
    #[arg(long)]
    pub delta: Option<f64>,
    /// Imaginary sample size (default: n).
    #[arg(long)]
    pub n_star: Option<usize>,
    /// g-prior variance multiplier (default: delta * n*).
    #[arg(long)]
    pub g: Option<f64>,
    /// Inverse-gamma shape (default 0.01).
    #[arg(long)]
    pub a: Option<f64>,
    /// Inverse-gamma scale (default 0.01).
    #[arg(long)]
    pub b: Option<f64>,
    /// Seed of the training subsample when n* < n (default: the master seed).
    #[arg(long)]
    pub training_seed: Option<u64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SchemeArg {
    Auto,
    #[value(name = "1")]
    One,
    #[value(name = "2")]
    Two,
    Quadrature,
}

#[derive(Debug, Args, Clone)]
pub struct EstimatorArgs {
    /// Marginal likelihood estimator; auto uses scheme 1 for zpep and 2 for jpep.
    #[arg(long, value_enum, default_value_t = SchemeArg::Auto)]
    pub scheme: SchemeArg,
    /// Monte-Carlo iterations per model.
    #[arg(long, default_value_t = pep_core::marginal::DEFAULT_ITERATIONS)]
    pub iterations: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SearchArg {
    /// Enumerate when p ≤ 20, otherwise MC³.
    Auto,
    Enumerate,
    Mc3,
    TwoStep,
}

#[derive(Debug, Args)]
pub struct SelectArgs {
    #[command(flatten)]
    pub data: DataArgs,
    #[command(flatten)]
    pub prior: PriorArgs,
    #[command(flatten)]
    pub estimator: EstimatorArgs,
    #[arg(long, value_enum, default_value_t = SearchArg::Auto)]
    pub search: SearchArg,
    /// MC³ iterations (first step of two-step).
    #[arg(long, default_value_t = 20_000)]
    pub mc3_iterations: usize,
    /// MC³ iterations of the second two-step stage (default: same as the first).
    #[arg(long)]
    pub mc3_iterations2: Option<usize>,
    /// Inclusion threshold of the two-step search.
    #[arg(long, default_value_t = pep_core::search::DEFAULT_THRESHOLD)]
    pub threshold: f64,
    /// Models listed in summary.json.
    #[arg(long, default_value_t = 10)]
    pub top: usize,
    /// Record wall-clock time in summary.json (makes it run-dependent).
    #[arg(long)]
    pub timing: bool,
    /// Output directory.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct MarginalArgs {
    #[command(flatten)]
    pub data: DataArgs,
    #[command(flatten)]
    pub prior: PriorArgs,
    #[command(flatten)]
    pub estimator: EstimatorArgs,
    /// Model as a 0/1 string over the covariates or comma-separated names; empty for the constant model.
    #[arg(long, default_value = "")]
    pub model: String,
}

#[derive(Debug, Args)]
pub struct SampleArgs {
    #[command(flatten)]
    pub data: DataArgs,
    #[command(flatten)]
    pub prior: PriorArgs,
    #[arg(long, default_value = "")]
    pub model: String,
    /// Posterior draws.
    #[arg(long, default_value_t = 1000)]
    pub draws: usize,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SimKind {
    NottKohn,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    #[arg(long, value_enum, default_value_t = SimKind::NottKohn)]
    pub kind: SimKind,
    /// Output CSV file.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum RmseMethodArg {
    /// PEP posterior with the prior options.
    Pep,
    /// Reference-prior posterior fitted directly.
    Reference,
}

#[derive(Debug, Args)]
pub struct RmseArgs {
    #[command(flatten)]
    pub data: DataArgs,
    #[command(flatten)]
    pub prior: PriorArgs,
    #[arg(long, default_value = "")]
    pub model: String,
    #[arg(long, value_enum, default_value_t = RmseMethodArg::Pep)]
    pub method: RmseMethodArg,
    #[arg(long, default_value_t = pep_core::experiments::DEFAULT_PARTITIONS)]
    pub partitions: usize,
    #[arg(long, default_value_t = 1000)]
    pub draws: usize,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct SensitivityArgs {
    #[command(flatten)]
    pub data: DataArgs,
    #[command(flatten)]
    pub prior: PriorArgs,
    #[command(flatten)]
    pub estimator: EstimatorArgs,
    /// Values of n*: a range `lo..hi` (inclusive) or a comma-separated list.
    #[arg(long)]
    pub grid: String,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct ConsistencyArgs {
    /// Increasing sample sizes.
    #[arg(long, value_delimiter = ',', default_values_t = [100usize, 500, 2000])]
    pub n_grid: Vec<usize>,
    #[arg(long, default_value_t = 200)]
    pub replicates: usize,
    #[arg(long, default_value_t = 1.0)]
    pub beta0: f64,
    #[arg(long, default_value_t = 0.3)]
    pub beta1: f64,
    #[arg(long, default_value_t = 1.0)]
    pub sigma: f64,
    #[arg(long)]
    pub out: PathBuf,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(t) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(t).build_global() {
            eprintln!("pep: configuration error: {e}");
            return ExitCode::from(error::EXIT_CONFIG as u8);
        }
    }
    match commands::run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("pep: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
