use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use lst_core::estimators::{AaConfig, Method, MethodOptions};
use lst_core::model_selection::CvGrid;
use lst_core::simulation::{Design, Scheme, SimulationSpec};
use serde::Serialize;

#[derive(Debug, Parser)]
#[command(name = "lstreg", version, about = "Robust sparse regression by depth-trimmed least squares")]
pub struct Cli {
    #[command(flatten)]
    pub global: GlobalArgs,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct GlobalArgs {
    /// Directory for all artifacts; created if missing.
    #[arg(long, global = true, default_value = "lstreg-out")]
    pub output_dir: PathBuf,
    /// Master seed; a random one is drawn and logged when omitted.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    /// Artifact kinds to write (default: all). The config echo is always written.
    #[arg(long, global = true, value_delimiter = ',')]
    pub format: Vec<Format>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
    Svg,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Fit one estimator to a CSV file.
    Fit(FitArgs),
    /// Cross-validate lasso, lars or enet penalties on a CSV file.
    Cv(CvArgs),
    /// Run a replicated simulation study.
    Simulate(SimulateArgs),
    /// Probe breakdown with adversarial rows of growing magnitude.
    Breakdown(BreakdownArgs),
    /// Check the prediction-error bound on replicated clean data.
    Bound(BoundArgs),
    /// Select a response and screen predictors from real data.
    Screen(ScreenArgs),
    /// Score an estimate against true coefficients.
    Metrics(MetricsArgs),
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Fit(_) => "fit",
            Command::Cv(_) => "cv",
            Command::Simulate(_) => "simulate",
            Command::Breakdown(_) => "breakdown",
            Command::Bound(_) => "bound",
            Command::Screen(_) => "screen",
            Command::Metrics(_) => "metrics",
        }
    }
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct DataArgs {
    /// Input CSV.
    #[arg(long)]
    pub input: PathBuf,
    /// Response column by name or 0-based index (default: last column).
    #[arg(long)]
    pub response: Option<String>,
    #[arg(long, default_value_t = ',')]
    pub delimiter: char,
    /// The input has no header row.
    #[arg(long)]
    pub no_header: bool,
    /// Fit an unpenalized intercept.
    #[arg(long)]
    pub intercept: bool,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct AaArgs {
    /// Depth-trimming level (>= 1).
    #[arg(long, default_value_t = 1.0)]
    pub alpha: f64,
    /// Exponent of the first penalty (1 or 2).
    #[arg(long, default_value_t = 1.0)]
    pub gamma: f64,
    #[arg(long, default_value_t = 50)]
    pub outer_repeats: usize,
    /// Candidates per repeat (at least the number of coefficients).
    #[arg(long)]
    pub candidates: Option<usize>,
    #[arg(long, default_value_t = 10)]
    pub concentration_iters: usize,
    #[arg(long, default_value_t = 900)]
    pub step_cap: usize,
    /// Ridge penalty for the ridge method.
    #[arg(long, default_value_t = 1.0)]
    pub ridge_lambda: f64,
    /// Kept count for LTS (default floor((n + p + 1) / 2)).
    #[arg(long)]
    pub h: Option<usize>,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct GridArgs {
    /// Number of lambda multipliers of lambda0.
    #[arg(long, default_value_t = 10)]
    pub n_lambda: usize,
    /// Number of mixing values in [0, 1).
    #[arg(long, default_value_t = 10)]
    pub n_mix: usize,
    #[arg(long, default_value_t = 5)]
    pub cv_folds: usize,
    #[arg(long, default_value_t = 10)]
    pub cv_repeats: usize,
    /// Score folds by the smallest 80% of squared errors.
    #[arg(long)]
    pub trimmed_cv: bool,
    /// Fixed total penalty; skips cross-validation.
    #[arg(long)]
    pub lambda_star: Option<f64>,
    /// Fixed mixing value used with --lambda-star.
    #[arg(long, requires = "lambda_star")]
    pub alpha_star: Option<f64>,
}

impl GridArgs {
    pub fn grid(&self) -> CvGrid {
        match self.lambda_star {
            Some(l) => CvGrid::fixed(l, self.alpha_star.unwrap_or(0.0)),
            None => CvGrid {
                trimmed_mse: self.trimmed_cv,
                ..CvGrid::relative(self.n_lambda, self.n_mix).with_cv(self.cv_folds, self.cv_repeats)
            },
        }
    }
}

pub fn aa_config(aa: &AaArgs, seed: u64) -> AaConfig {
    AaConfig {
        outer_repeats: aa.outer_repeats,
        candidates_per_repeat: aa.candidates,
        concentration_iters: aa.concentration_iters,
        lars_step_cap: aa.step_cap,
        alpha: aa.alpha,
        gamma: aa.gamma,
        seed,
    }
}

pub fn method_options(aa: &AaArgs, grid: &GridArgs, seed: u64) -> MethodOptions {
    MethodOptions {
        config: aa_config(aa, seed),
        grid: grid.grid(),
        ridge_lambda: aa.ridge_lambda,
        lts_h: aa.h,
    }
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct FitArgs {
    #[command(flatten)]
    pub data: DataArgs,
    #[arg(long, default_value = "lst-enet")]
    pub method: Method,
    #[command(flatten)]
    pub aa: AaArgs,
    #[command(flatten)]
    pub grid: GridArgs,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct CvArgs {
    #[command(flatten)]
    pub data: DataArgs,
    #[arg(long, default_value = "lasso")]
    pub method: Method,
    #[arg(long, default_value_t = 900)]
    pub step_cap: usize,
    #[command(flatten)]
    pub grid: GridArgs,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct SimArgs {
    #[arg(long, default_value = "I")]
    pub design: Design,
    #[arg(long, default_value = "I")]
    pub scheme: Scheme,
    #[arg(long, default_value_t = 100)]
    pub n: usize,
    #[arg(long, default_value_t = 50)]
    pub p: usize,
    /// Contamination level in [0, 0.5).
    #[arg(long, default_value_t = 0.0)]
    pub eps: f64,
    #[arg(long, default_value_t = 0.5)]
    pub sigma: f64,
    #[arg(long, default_value_t = 0.95)]
    pub rho1: f64,
    #[arg(long, default_value_t = 0.05)]
    pub rho2: f64,
    /// Design I covariance sigma^2 I instead of sigma I.
    #[arg(long)]
    pub sigma_squared_cov: bool,
}

impl SimArgs {
    pub fn spec(&self, reps: usize, seed: u64, split: f64, clean_test: bool) -> SimulationSpec {
        SimulationSpec {
            design: self.design,
            n: self.n,
            p: self.p,
            sigma: self.sigma,
            rho1: self.rho1,
            rho2: self.rho2,
            eps: self.eps,
            scheme: self.scheme,
            replications: reps,
            seed,
            sigma_squared_cov: self.sigma_squared_cov,
            clean_test,
            split_ratio: split,
        }
    }
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct SimulateArgs {
    #[command(flatten)]
    pub sim: SimArgs,
    #[arg(long, default_value_t = 20)]
    pub reps: usize,
    /// Methods to compare (comma separated).
    #[arg(long, value_delimiter = ',', default_value = "lst-enet,lasso,lars,enet")]
    pub method: Vec<Method>,
    /// Training share of each replication.
    #[arg(long, default_value_t = 0.7)]
    pub split: f64,
    /// Draw test rows from uncontaminated rows only.
    #[arg(long)]
    pub clean_test: bool,
    #[command(flatten)]
    pub aa: AaArgs,
    #[command(flatten)]
    pub grid: GridArgs,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct BreakdownArgs {
    /// Input CSV; synthetic design-I data is generated when omitted.
    #[arg(long)]
    pub input: Option<PathBuf>,
    #[arg(long)]
    pub response: Option<String>,
    #[arg(long, default_value_t = ',')]
    pub delimiter: char,
    #[arg(long)]
    pub no_header: bool,
    #[arg(long, default_value_t = 50)]
    pub n: usize,
    #[arg(long, default_value_t = 10)]
    pub p: usize,
    #[arg(long, default_value_t = 0.5)]
    pub sigma: f64,
    #[arg(long, default_value = "lasso")]
    pub method: Method,
    /// Number of adversarial rows.
    #[arg(long, default_value_t = 1)]
    pub m: usize,
    #[arg(long, value_delimiter = ',', default_value = "1e2,1e3,1e4,1e5,1e6")]
    pub deltas: Vec<f64>,
    #[command(flatten)]
    pub aa: AaArgs,
    #[command(flatten)]
    pub grid: GridArgs,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct BoundArgs {
    #[command(flatten)]
    pub sim: SimArgs,
    #[arg(long, default_value_t = 200)]
    pub reps: usize,
    /// Confidence parameter of the bound.
    #[arg(long, default_value_t = 0.1)]
    pub delta: f64,
    /// lambda1 as a multiple of q1.
    #[arg(long, default_value_t = 1.0)]
    pub lambda1_factor: f64,
    #[arg(long, default_value_t = 0.0)]
    pub lambda2: f64,
    #[command(flatten)]
    pub aa: AaArgs,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct ScreenArgs {
    /// Predictor CSV (rows are samples).
    #[arg(long)]
    pub input: PathBuf,
    /// Response candidates CSV with the same rows.
    #[arg(long)]
    pub responses: PathBuf,
    #[arg(long, default_value_t = 100)]
    pub k1: usize,
    #[arg(long, default_value_t = 1000)]
    pub p_target: usize,
    #[arg(long, default_value_t = 0.7)]
    pub split: f64,
    #[arg(long, default_value_t = ',')]
    pub delimiter: char,
    #[arg(long)]
    pub no_header: bool,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct MetricsArgs {
    /// True coefficients, comma separated.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true, required = true)]
    pub beta0: Vec<f64>,
    /// Estimated coefficients, comma separated.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true, required = true)]
    pub beta: Vec<f64>,
    /// |b| at or below this counts as zero.
    #[arg(long, default_value_t = 0.0)]
    pub threshold: f64,
    /// Optional test CSV for the prediction error.
    #[arg(long)]
    pub input: Option<PathBuf>,
    #[arg(long)]
    pub response: Option<String>,
    #[arg(long, default_value_t = ',')]
    pub delimiter: char,
    #[arg(long)]
    pub no_header: bool,
    #[arg(long)]
    pub intercept: bool,
}
