use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};

#[derive(Debug, Parser)]
#[command(
    name = "srot",
    version,
    about = "Semi-relaxed optimal transport toolkit"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run a solver on one instance.
    Solve(SolveArgs),
    /// Evaluate convergence bounds or parameter prescriptions.
    Bounds(BoundsArgs),
    /// Run a seeded experiment and write its CSV/JSON outputs.
    Experiment(ExperimentArgs),
    /// Round a plan onto the transport polytope of an instance.
    Round(RoundArgs),
    /// Generate a random instance.
    Generate(GenerateArgs),
}

/// Where the instance comes from: `--instance FILE` or the generator flags.
#[derive(Debug, Default, Clone, Args, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub struct InstanceArgs {
    /// Instance JSON file.
    #[arg(long)]
    pub instance: Option<PathBuf>,
    /// Size of a generated instance (default 50).
    #[arg(long)]
    pub n: Option<usize>,
    /// Generator seed (default 0).
    #[arg(long)]
    pub seed: Option<u64>,
    /// Cost interval, default [1, 10].
    #[arg(long)]
    pub cost_lo: Option<f64>,
    #[arg(long)]
    pub cost_hi: Option<f64>,
    /// Weight interval, default [1, 5].
    #[arg(long)]
    pub weight_lo: Option<f64>,
    #[arg(long)]
    pub weight_hi: Option<f64>,
    /// Keep raw weights instead of normalizing to unit mass.
    #[arg(long, num_args = 0..=1, default_missing_value = "true")]
    pub no_normalize: Option<bool>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SolverKind {
    SrSinkhorn,
    Sinkhorn,
    UotSinkhorn,
    Pot,
    ExactOt,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Default, Args, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
#[command(allow_negative_numbers = true)]
pub struct SolveArgs {
    /// JSON file with default values for any of these flags.
    #[arg(long)]
    #[serde(skip)]
    pub config: Option<PathBuf>,
    #[command(flatten)]
    #[serde(flatten)]
    pub source: InstanceArgs,
    /// Solver (default sr-sinkhorn).
    #[arg(long, value_enum)]
    pub solver: Option<SolverKind>,
    /// KL weight on the relaxed row marginal (default 1).
    #[arg(long)]
    pub tau: Option<f64>,
    /// Entropy weight (default 0.1).
    #[arg(long)]
    pub eta: Option<f64>,
    /// Row KL weight of the unbalanced solver (default: --tau).
    #[arg(long)]
    pub tau1: Option<f64>,
    /// Column KL weight of the unbalanced solver (default: --tau).
    #[arg(long)]
    pub tau2: Option<f64>,
    /// Half-iterations (default 1000).
    #[arg(long, alias = "iterations")]
    pub iters: Option<usize>,
    /// Trace stride; 0 records only the final iterate (default 1).
    #[arg(long)]
    pub trace_every: Option<usize>,
    /// Stop once the dual increment is at most this (default 0, disabled).
    #[arg(long)]
    pub tol: Option<f64>,
    /// Directory for plan.csv, trace.{csv,json} and summary.json.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Trace format (default csv).
    #[arg(long, value_enum)]
    pub format: Option<Format>,
    /// Also write the instance as JSON.
    #[arg(long)]
    pub emit_instance: Option<PathBuf>,
}

#[derive(Debug, Default, Args, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
#[command(allow_negative_numbers = true)]
pub struct BoundsArgs {
    #[arg(long)]
    #[serde(skip)]
    pub config: Option<PathBuf>,
    #[command(flatten)]
    #[serde(flatten)]
    pub source: InstanceArgs,
    /// Default 1.
    #[arg(long)]
    pub tau: Option<f64>,
    /// Default 0.1.
    #[arg(long)]
    pub eta: Option<f64>,
    /// Iterates at which to evaluate (repeatable or comma-separated).
    #[arg(long, value_delimiter = ',')]
    #[serde(default)]
    pub k: Vec<usize>,
    /// Bounds to evaluate: log-ratio, marginal-general, log-column-gap,
    /// marginal-simplex, ot-gap, dual-gap (all applicable ones if omitted).
    #[arg(long, value_delimiter = ',')]
    #[serde(default)]
    pub bound: Vec<String>,
    /// Known `‖u*‖∞` instead of the a-priori cap.
    #[arg(long)]
    pub u_star: Option<f64>,
    /// Parameter recipe: `ef=<ε>`, `ec=<ε>` (uses --eta) or `ed=<ε>`.
    #[arg(long)]
    pub prescribe: Option<String>,
    /// Shorthand for `--prescribe ef=<ε>`.
    #[arg(long)]
    pub epsilon_f: Option<f64>,
    /// Output format (default json).
    #[arg(long, value_enum)]
    pub format: Option<Format>,
    /// Write to this file instead of stdout.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Default, Args, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub struct ExperimentArgs {
    /// marginal-gap | ot-gap | iteration-bounds | sinkhorn-compare | unregularized-bound
    #[serde(skip)]
    pub id: String,
    #[arg(long)]
    #[serde(skip)]
    pub config: Option<PathBuf>,
    /// Full experiment spec JSON (as found in a summary's provenance) to start from.
    #[arg(long)]
    pub spec: Option<PathBuf>,
    /// Seeds (repeatable or comma-separated).
    #[arg(long, value_delimiter = ',')]
    #[serde(default)]
    pub seed: Vec<u64>,
    #[arg(long)]
    pub n: Option<usize>,
    /// KL weight; for sweep experiments this replaces the τ grid.
    #[arg(long, value_delimiter = ',')]
    #[serde(default)]
    pub tau: Vec<f64>,
    #[arg(long)]
    pub eta: Option<f64>,
    #[arg(long)]
    pub tau1: Option<f64>,
    #[arg(long)]
    pub tau2: Option<f64>,
    #[arg(long, alias = "iterations")]
    pub iters: Option<usize>,
    /// Output stride of per-iteration series.
    #[arg(long)]
    pub stride: Option<usize>,
    /// Number of points of the ε grid.
    #[arg(long)]
    pub epsilon_count: Option<usize>,
    #[arg(long)]
    pub censor_factor: Option<f64>,
    /// Take `‖u*‖∞` from a long reference run instead of the a-priori cap.
    #[arg(long, num_args = 0..=1, default_missing_value = "true")]
    pub reference_dual_norm: Option<bool>,
    /// Output directory (default `results`).
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Default, Args, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
#[command(allow_negative_numbers = true)]
pub struct RoundArgs {
    #[arg(long)]
    #[serde(skip)]
    pub config: Option<PathBuf>,
    #[command(flatten)]
    #[serde(flatten)]
    pub source: InstanceArgs,
    /// Plan CSV in `i,j,value` format.
    #[arg(long)]
    pub plan: Option<PathBuf>,
    /// Rounded plan CSV; the summary always goes to stdout.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Default, Args, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
#[command(allow_negative_numbers = true)]
pub struct GenerateArgs {
    #[arg(long)]
    #[serde(skip)]
    pub config: Option<PathBuf>,
    #[command(flatten)]
    #[serde(flatten)]
    pub source: InstanceArgs,
    /// Instance JSON path (stdout if omitted).
    #[arg(long)]
    pub out: Option<PathBuf>,
}
