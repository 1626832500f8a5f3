use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

#[derive(Debug, Parser, Serialize)]
#[command(name = "gpa", version, about = "Anomaly attribution for black-box regression models")]
pub struct Cli {
    /// Seed shared by every stochastic step.
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Command {
    /// Score every sample by its negative log-likelihood and pick outliers.
    Detect(DetectArgs),
    /// Attribute the deviation of selected samples with one or more methods.
    Explain(ExplainArgs),
    /// MAP perturbation and per-variable score distributions.
    Dist(DistArgs),
    /// Consistency of several methods against a reference method.
    Compare(CompareArgs),
    /// Closed-form values on the 2D sinusoidal model.
    Oracle(OracleArgs),
}

#[derive(Debug, Args, Serialize)]
pub struct ModelArgs {
    /// Built-in model: `sinusoidal2d`, `linear:c1,c2,..` or `quadratic:c1,c2,..`.
    #[arg(long)]
    pub model: Option<String>,
    /// Shell command speaking newline-delimited JSON (`{"x":[...]}` in,
    /// `{"y":<number>}` out, one request per line).
    #[arg(long)]
    pub model_cmd: Option<String>,
    /// Base URL of an HTTP model server.
    #[arg(long, env = "GPA_MODEL_URL")]
    pub model_url: Option<String>,
    /// Per-request timeout for external models.
    #[arg(long, default_value_t = 30_000)]
    pub timeout_ms: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum StandardizeMode {
    /// Estimate from the test set when possible, otherwise leave raw.
    Auto,
    /// Estimate from the test set; fail on constant columns.
    Test,
    /// Use the raw inputs.
    None,
}

#[derive(Debug, Args, Serialize)]
pub struct DataArgs {
    /// Test data: headed CSV, last column is the target.
    #[arg(long)]
    pub data: PathBuf,
    /// Where the standardization statistics come from when `--stats` is absent.
    #[arg(long, value_enum, default_value_t = StandardizeMode::Auto)]
    pub standardize: StandardizeMode,
    /// Per-variable statistics: headed CSV with one `mean,std` row per variable.
    #[arg(long)]
    pub stats: Option<PathBuf>,
}

#[derive(Debug, Args, Serialize)]
pub struct SelectArgs {
    /// Single sample to explain.
    #[arg(long, conflicts_with = "indices")]
    pub point_index: Option<usize>,
    /// Several samples, comma-separated.
    #[arg(long, value_delimiter = ',')]
    pub indices: Option<Vec<usize>>,
    /// Explain the selected samples jointly with one shared perturbation.
    #[arg(long)]
    pub collective: bool,
}

#[derive(Debug, Args, Serialize)]
pub struct GpaArgs {
    /// l2 strength (default 0.1 N).
    #[arg(long)]
    pub eta: Option<f64>,
    /// l1 strength relative to eta (default 0.5).
    #[arg(long)]
    pub nu: Option<f64>,
    /// Learning rate (default 0.1 / N).
    #[arg(long)]
    pub kappa: Option<f64>,
    /// Gamma prior shape (default 5.5).
    #[arg(long)]
    pub a0: Option<f64>,
    /// Fixed gamma rate; estimated from residuals when absent.
    #[arg(long)]
    pub b0: Option<f64>,
    /// Virtual-sample correction of the estimated rate.
    #[arg(long = "cb", default_value_t = 10.0)]
    pub c_b: f64,
    /// Refine per-sample rates with this many kernel-weighted rounds.
    #[arg(long)]
    pub kernel_iters: Option<usize>,
    #[arg(long, default_value_t = 10_000)]
    pub max_iter: usize,
    #[arg(long, default_value_t = 1e-6)]
    pub tol: f64,
    #[arg(long, default_value_t = 100)]
    pub grid_points: usize,
    /// Standard deviation of the gradient-probing perturbations.
    #[arg(long, default_value_t = 1.0)]
    pub grad_std: f64,
    #[arg(long, default_value_t = 10)]
    pub mc_samples: usize,
    /// Pair gradient probes as +h/-h.
    #[arg(long)]
    pub antithetic: bool,
}

#[derive(Debug, Args, Serialize)]
pub struct BaselineArgs {
    /// IG baseline input, comma-separated, raw units.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub baseline: Option<Vec<f64>>,
    /// Reference inputs for EIG, SV and Z-score: headed CSV, raw units.
    #[arg(long = "ref")]
    pub reference: Option<PathBuf>,
    #[arg(long, default_value_t = 1000)]
    pub lime_samples: usize,
    /// Spread of the LIME cloud in standardized units.
    #[arg(long, default_value_t = 0.3)]
    pub lime_std: f64,
    #[arg(long, default_value_t = 0.0)]
    pub lime_l1: f64,
    #[arg(long, default_value_t = 0.1)]
    pub baylime_eta: f64,
    #[arg(long, default_value_t = 1.0)]
    pub baylime_lambda: f64,
    #[arg(long, default_value_t = 100)]
    pub n_intervals: usize,
    #[arg(long, default_value_t = 100)]
    pub sv_configs: usize,
    /// Noise precision of the LC loss.
    #[arg(long, default_value_t = 1.0)]
    pub lc_lambda: f64,
    #[arg(long, default_value_t = 0.01)]
    pub lc_kappa: f64,
}

#[derive(Debug, Args, Serialize)]
pub struct DetectArgs {
    #[command(flatten)]
    pub model: ModelArgs,
    #[command(flatten)]
    pub data: DataArgs,
    /// Noise variance of the Gaussian likelihood; mean squared residual when absent.
    #[arg(long)]
    pub noise_var: Option<f64>,
    /// Number of outliers to select.
    #[arg(long, default_value_t = 1)]
    pub top: usize,
    #[arg(long, default_value = "gpa-out")]
    pub out: PathBuf,
}

#[derive(Debug, Args, Serialize)]
pub struct ExplainArgs {
    #[command(flatten)]
    pub model: ModelArgs,
    #[command(flatten)]
    pub data: DataArgs,
    #[command(flatten)]
    pub select: SelectArgs,
    /// Comma-separated subset of gpa,lc,lime,lime0,baylime,ig,eig,sv,zscore.
    #[arg(long, value_delimiter = ',', default_value = "gpa")]
    pub methods: Vec<String>,
    #[command(flatten)]
    pub gpa: GpaArgs,
    #[command(flatten)]
    pub baselines: BaselineArgs,
    #[arg(long)]
    pub noise_var: Option<f64>,
    #[arg(long, default_value = "gpa-out")]
    pub out: PathBuf,
}

#[derive(Debug, Args, Serialize)]
pub struct DistArgs {
    #[command(flatten)]
    pub model: ModelArgs,
    #[command(flatten)]
    pub data: DataArgs,
    #[command(flatten)]
    pub select: SelectArgs,
    #[command(flatten)]
    pub gpa: GpaArgs,
    #[arg(long, default_value = "gpa-out")]
    pub out: PathBuf,
}

#[derive(Debug, Args, Serialize)]
pub struct CompareArgs {
    #[command(flatten)]
    pub model: ModelArgs,
    #[command(flatten)]
    pub data: DataArgs,
    /// Samples to compare on (all when absent).
    #[arg(long, value_delimiter = ',')]
    pub indices: Option<Vec<usize>>,
    /// Methods to compare, including the reference.
    #[arg(long, value_delimiter = ',', default_value = "gpa,lc,lime")]
    pub methods: Vec<String>,
    #[arg(long = "reference", default_value = "gpa")]
    pub reference_method: String,
    #[command(flatten)]
    pub gpa: GpaArgs,
    #[command(flatten)]
    pub baselines: BaselineArgs,
    #[arg(long, default_value = "gpa-out")]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum OracleKind {
    Lime0,
    Gpa,
    Lc,
    Ig,
    Sv,
}

#[derive(Debug, Args, Serialize)]
pub struct OracleArgs {
    #[arg(value_enum)]
    pub kind: OracleKind,
    /// Test input `x1,x2`.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true, num_args = 1)]
    pub x: Vec<f64>,
    /// Observed output (gpa, lc).
    #[arg(long, allow_hyphen_values = true)]
    pub y: Option<f64>,
    /// Baseline input `x1,x2` (ig).
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub x0: Option<Vec<f64>>,
}
