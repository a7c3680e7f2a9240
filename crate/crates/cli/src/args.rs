//! Command-line flags. Every flag is optional so that it can override the
//! matching field of a `--config` file.

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Debug, Parser)]
#[command(name = "cic", version, about = "Changes-in-changes estimation, simulation and validation")]
pub struct Cli {
    /// JSON run configuration; flags override its fields.
    #[arg(long, global = true, value_name = "PATH")]
    pub config: Option<PathBuf>,

    #[command(subcommand)]
    pub command: Option<Command>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Cross-fitted estimate on a CSV panel.
    Estimate(EstimateArgs),
    /// Draw a dataset from a design and write it with its oracle truth.
    Simulate(SimulateArgs),
    /// Orthogonality and bridge checks against a design's true nuisances.
    Validate(ValidateArgs),
    /// Interval coverage of the ATT estimator over seeded replications.
    Coverage(CoverageArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum EstimandKind {
    Att,
    Cdt,
    Qtt,
    /// Counterfactual mean of the treated through the general moment class.
    Mean,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum FormatArg {
    Json,
    Tsv,
}

#[derive(Debug, Default, Args)]
pub struct CrossFitArgs {
    /// Number of folds K.
    #[arg(long)]
    pub folds: Option<usize>,
    /// Number of repetitions S.
    #[arg(long)]
    pub reps: Option<usize>,
    /// Model-selection folds K'; tuning is skipped when absent.
    #[arg(long = "cv-folds")]
    pub cv_folds: Option<usize>,
    /// Interval level alpha.
    #[arg(long)]
    pub alpha: Option<f64>,
    /// Plain random partition instead of stratifying folds by arm.
    #[arg(long = "no-stratify")]
    pub no_stratify: bool,
}

#[derive(Debug, Default, Args)]
pub struct OutputArgs {
    /// Output file; standard output when absent.
    #[arg(long, value_name = "PATH")]
    pub output: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub format: Option<FormatArg>,
}

#[derive(Debug, Default, Args)]
pub struct DgpArgs {
    /// Design name: did, stm-exp, stm-power, stm-q3 or violation.
    #[arg(long)]
    pub dgp: Option<String>,
    /// Sample size per dataset.
    #[arg(long)]
    pub n: Option<usize>,
    /// Period trend of the did design.
    #[arg(long)]
    pub trend: Option<f64>,
    /// Additive treated effect.
    #[arg(long)]
    pub effect: Option<f64>,
    /// Treated share of the did design.
    #[arg(long)]
    pub pi: Option<f64>,
}

#[derive(Debug, Default, Args)]
pub struct EstimateArgs {
    /// CSV panel with header `y0,y1,a,l1,...,lp`.
    #[arg(long, value_name = "PATH")]
    pub input: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub estimand: Option<EstimandKind>,
    /// Evaluation point of the counterfactual CDF.
    #[arg(long)]
    pub y: Option<f64>,
    /// Quantile level.
    #[arg(long)]
    pub tau: Option<f64>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[command(flatten)]
    pub crossfit: CrossFitArgs,
    #[command(flatten)]
    pub out: OutputArgs,
}

#[derive(Debug, Default, Args)]
pub struct SimulateArgs {
    #[command(flatten)]
    pub dgp: DgpArgs,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Dataset CSV; standard output when absent.
    #[arg(long, value_name = "PATH")]
    pub output: Option<PathBuf>,
    /// Oracle JSON; defaults to the dataset path with extension `oracle.json`.
    #[arg(long, value_name = "PATH")]
    pub oracle: Option<PathBuf>,
}

#[derive(Debug, Default, Args)]
pub struct ValidateArgs {
    #[command(flatten)]
    pub dgp: DgpArgs,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Monte Carlo draws per check.
    #[arg(long = "mc-size")]
    pub mc_size: Option<usize>,
    /// Finite-difference step in lambda.
    #[arg(long)]
    pub step: Option<f64>,
    /// Number of random perturbation directions.
    #[arg(long)]
    pub perturbations: Option<usize>,
    #[command(flatten)]
    pub out: OutputArgs,
}

#[derive(Debug, Default, Args)]
pub struct CoverageArgs {
    #[command(flatten)]
    pub dgp: DgpArgs,
    /// Master seed of the replication schedule.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Number of simulated datasets.
    #[arg(long)]
    pub replications: Option<usize>,
    #[command(flatten)]
    pub crossfit: CrossFitArgs,
    #[command(flatten)]
    pub out: OutputArgs,
}
