use std::path::PathBuf;

use bandit_minimax::pde::GridSpec;
use bandit_minimax::{Error, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

#[derive(Parser, Debug, Serialize)]
#[command(name = "bandit-minimax", version, about = "Minimax strategies for the one-armed bandit under batch processing")]
pub struct Cli {
    /// Worker threads; 0 picks the number of cores.
    #[arg(long, global = true, env = "BANDIT_MINIMAX_THREADS", default_value_t = 0)]
    pub threads: usize,

    /// Suppress progress messages on stderr.
    #[arg(long, global = true)]
    pub quiet: bool,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug, Serialize)]
pub enum Command {
    /// Solve the limiting free-boundary equation for a prior.
    SolvePde(SolvePdeArgs),
    /// Solve the exact batch recursion for a prior and schedule.
    BatchDp(BatchDpArgs),
    /// Search two-point priors for the largest Bayesian risk.
    WorstPrior(WorstPriorArgs),
    /// Expected losses of a threshold strategy over a range of gaps.
    Losses(LossesArgs),
    /// Exact Bayesian risk of the Bernoulli bandit.
    BernoulliDp(BernoulliArgs),
    /// Monte Carlo batch processing of Bernoulli incomes.
    Simulate(SimulateArgs),
    /// Regenerate the data behind figures 1 to 6.
    Reproduce(ReproduceArgs),
}

/// Accepts decimals and `a/b` fractions.
pub fn parse_number(s: &str) -> std::result::Result<f64, String> {
    let v = match s.split_once('/') {
        Some((a, b)) => {
            let a: f64 = a.trim().parse().map_err(|e| format!("{e}"))?;
            let b: f64 = b.trim().parse().map_err(|e| format!("{e}"))?;
            a / b
        }
        None => s.trim().parse().map_err(|e| format!("{e}"))?,
    };
    if v.is_finite() {
        Ok(v)
    } else {
        Err(format!("{s} is not a finite number"))
    }
}

#[derive(ValueEnum, Clone, Copy, Debug, Serialize, PartialEq, Eq)]
#[serde(rename_all = "lowercase")]
pub enum GridPreset {
    /// dt = 1/5000, dx = 0.0143.
    Production,
    /// dt = 1/2000, dx = 0.025.
    Coarse,
}

impl GridPreset {
    fn spec(self) -> GridSpec {
        match self {
            GridPreset::Production => GridSpec::production(),
            GridPreset::Coarse => GridSpec::coarse(),
        }
    }
}

fn resolve_grid(preset: GridPreset, dt: Option<f64>, dx: Option<f64>, half_width: Option<f64>) -> Result<GridSpec> {
    let base = preset.spec();
    if dt.is_none() && dx.is_none() && half_width.is_none() {
        return Ok(base);
    }
    GridSpec::symmetric(half_width.unwrap_or(6.0), dx.unwrap_or(base.dx()), dt.unwrap_or(base.dt()))
}

#[derive(Args, Debug, Clone, Serialize)]
pub struct GridArgs {
    /// Preset space-time lattice.
    #[arg(long, value_enum, default_value_t = GridPreset::Production)]
    pub grid: GridPreset,
    /// Time step, overriding the preset; fractions like 1/5000 are accepted.
    #[arg(long, value_parser = parse_number)]
    pub dt: Option<f64>,
    /// Space step, overriding the preset.
    #[arg(long, value_parser = parse_number)]
    pub dx: Option<f64>,
    /// Half width of the x range.
    #[arg(long, value_parser = parse_number)]
    pub half_width: Option<f64>,
}

impl GridArgs {
    pub fn resolve(&self) -> Result<GridSpec> {
        resolve_grid(self.grid, self.dt, self.dx, self.half_width)
    }
}

#[derive(Args, Debug, Clone, Serialize)]
pub struct ModelArgs {
    /// JSON model file: {"atoms": [{"w": .., "p": ..}], "D": 1.0, "c": 2.52}.
    #[arg(long)]
    pub config: PathBuf,
    /// Variance D, overriding the config file.
    #[arg(long, value_parser = parse_number)]
    pub variance: Option<f64>,
    /// Bound c on |w|, overriding the config file.
    #[arg(long, value_parser = parse_number)]
    pub bound: Option<f64>,
}

#[derive(Args, Debug, Serialize)]
pub struct SolvePdeArgs {
    #[command(flatten)]
    pub model: ModelArgs,
    #[command(flatten)]
    pub grid: GridArgs,
    /// Risk field output with columns t,x,r,action.
    #[arg(long = "out-risk", alias = "out", default_value = "risk.csv")]
    pub out_risk: PathBuf,
    /// Threshold output with columns t,T; defaults to threshold.csv next to the risk file.
    #[arg(long = "out-threshold", alias = "thresholds")]
    pub out_threshold: Option<PathBuf>,
    /// Write every n-th time row.
    #[arg(long, default_value_t = 1)]
    pub t_stride: usize,
    /// Write every n-th space node.
    #[arg(long, default_value_t = 1)]
    pub x_stride: usize,
}

#[derive(Args, Debug, Serialize)]
pub struct BatchDpArgs {
    #[command(flatten)]
    pub model: ModelArgs,
    /// Batch count ("50") or COUNTxFRACTION groups ("2x1/400,49x199/9800").
    #[arg(long, default_value = "50")]
    pub schedule: String,
    /// Quadrature step on the x grid.
    #[arg(long, value_parser = parse_number, default_value = "0.01")]
    pub step: f64,
    /// Half width of the x grid.
    #[arg(long, value_parser = parse_number, default_value = "6")]
    pub half_width: f64,
    /// Risk output with columns stage,t,x,r,action.
    #[arg(long, default_value = "risk_eps.csv")]
    pub out: PathBuf,
    /// Optional per-stage threshold output.
    #[arg(long)]
    pub thresholds: Option<PathBuf>,
    #[arg(long, default_value_t = 1)]
    pub x_stride: usize,
}

#[derive(ValueEnum, Clone, Copy, Debug, Serialize, PartialEq, Eq)]
#[serde(rename_all = "kebab-case")]
pub enum SolverName {
    Pde,
    BatchDp,
}

impl SolverName {
    pub fn registry_name(self) -> &'static str {
        match self {
            SolverName::Pde => "pde",
            SolverName::BatchDp => "batch-dp",
        }
    }
}

#[derive(Args, Debug, Serialize)]
pub struct WorstPriorArgs {
    /// Optional model file; only its variance D is used.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Variance D, overriding the config file (default 1).
    #[arg(long, value_parser = parse_number)]
    pub variance: Option<f64>,
    #[arg(long, value_enum, default_value_t = SolverName::Pde)]
    pub solver: SolverName,
    /// Schedule for the batch-dp solver.
    #[arg(long, default_value = "50")]
    pub schedule: String,
    /// Lattice used during the search.
    #[arg(long, value_enum, default_value_t = GridPreset::Coarse)]
    pub search_grid: GridPreset,
    #[arg(long, value_parser = parse_number)]
    pub search_dt: Option<f64>,
    #[arg(long, value_parser = parse_number)]
    pub search_dx: Option<f64>,
    /// Lattice for re-scoring the optimum.
    #[arg(long, value_enum, default_value_t = GridPreset::Production)]
    pub final_grid: GridPreset,
    #[arg(long, value_parser = parse_number)]
    pub final_dt: Option<f64>,
    #[arg(long, value_parser = parse_number)]
    pub final_dx: Option<f64>,
    #[arg(long, value_parser = parse_number, default_value = "0.5")]
    pub d1_min: f64,
    #[arg(long, value_parser = parse_number, default_value = "3")]
    pub d1_max: f64,
    #[arg(long, value_parser = parse_number, default_value = "1")]
    pub d2_min: f64,
    #[arg(long, value_parser = parse_number, default_value = "4")]
    pub d2_max: f64,
    #[arg(long, value_parser = parse_number, default_value = "0.1")]
    pub rho_min: f64,
    #[arg(long, value_parser = parse_number, default_value = "0.9")]
    pub rho_max: f64,
    /// Lattice points per axis.
    #[arg(long, default_value_t = 5)]
    pub lattice: usize,
    /// Golden-section bracket tolerance.
    #[arg(long, value_parser = parse_number, default_value = "0.001")]
    pub tol: f64,
    /// Include every evaluated candidate in the output.
    #[arg(long)]
    pub trace: bool,
    #[arg(long, default_value = "worst.json")]
    pub out: PathBuf,
    /// Also write the minimax thresholds (pde solver only).
    #[arg(long)]
    pub thresholds: Option<PathBuf>,
}

impl WorstPriorArgs {
    pub fn search_grid(&self) -> Result<GridSpec> {
        resolve_grid(self.search_grid, self.search_dt, self.search_dx, None)
    }

    pub fn final_grid(&self) -> Result<GridSpec> {
        resolve_grid(self.final_grid, self.final_dt, self.final_dx, None)
    }
}

#[derive(ValueEnum, Clone, Copy, Debug, Serialize, PartialEq, Eq)]
#[serde(rename_all = "lowercase")]
pub enum ForcedAction {
    /// Probe the unknown arm during the initial stage.
    Unknown,
    /// Use the known arm, which is then kept.
    Known,
}

#[derive(Args, Debug, Serialize)]
pub struct LossesArgs {
    /// Threshold strategy file with columns t,T.
    #[arg(long)]
    pub strategy: PathBuf,
    #[arg(long, value_parser = parse_number, default_value = "-8", allow_hyphen_values = true)]
    pub d_min: f64,
    #[arg(long, value_parser = parse_number, default_value = "8", allow_hyphen_values = true)]
    pub d_max: f64,
    #[arg(long, default_value_t = 81)]
    pub points: usize,
    /// Variance of the evaluation world.
    #[arg(long, value_parser = parse_number, default_value = "1")]
    pub d_true: f64,
    /// Variance the strategy was designed for (recorded only).
    #[arg(long, value_parser = parse_number, default_value = "1")]
    pub d_design: f64,
    #[command(flatten)]
    pub grid: GridArgs,
    /// Fraction of the horizon spent on a forced initial stage; adds
    /// loss_with and loss_without columns.
    #[arg(long, value_parser = parse_number)]
    pub initial_stage: Option<f64>,
    #[arg(long, value_enum, default_value_t = ForcedAction::Unknown)]
    pub forced: ForcedAction,
    #[arg(long, default_value = "losses.csv")]
    pub out: PathBuf,
}

#[derive(Args, Debug, Serialize)]
pub struct BernoulliArgs {
    /// Success probability of method 1.
    #[arg(long, value_parser = parse_number)]
    pub p: f64,
    /// JSON prior {"atoms": [{"p2": .., "q": ..}]}.
    #[arg(long, conflicts_with = "mapped_from", required_unless_present = "mapped_from")]
    pub prior: Option<PathBuf>,
    /// Gaussian model file whose atoms w map to p2 = p + w·√(p(1−p)/N).
    #[arg(long)]
    pub mapped_from: Option<PathBuf>,
    #[arg(long = "N")]
    pub n: usize,
    /// Forced initial plays of method 2; defaults to ⌈√N⌉.
    #[arg(long)]
    pub n0: Option<usize>,
    /// Largest N accepted by the exact table.
    #[arg(long, default_value_t = bandit_minimax::bernoulli::DEFAULT_MAX_ITEMS)]
    pub max_n: usize,
    #[arg(long, default_value = "bern.json")]
    pub out: PathBuf,
}

#[derive(Args, Debug, Serialize)]
pub struct SimulateArgs {
    #[arg(long)]
    pub strategy: PathBuf,
    #[arg(long = "T", default_value_t = 5000)]
    pub total_items: usize,
    /// Batch sizes as COUNTxSIZE groups.
    #[arg(long, default_value = "50x100")]
    pub schedule: String,
    #[arg(long, value_parser = parse_number, default_value = "0.5")]
    pub p: f64,
    #[arg(long, value_parser = parse_number, default_value = "-12", allow_hyphen_values = true)]
    pub d_min: f64,
    #[arg(long, value_parser = parse_number, default_value = "4", allow_hyphen_values = true)]
    pub d_max: f64,
    #[arg(long, default_value_t = 33)]
    pub points: usize,
    #[arg(long, default_value_t = bandit_minimax::mcsim::DEFAULT_REPS)]
    pub reps: usize,
    #[arg(long, default_value_t = 42)]
    pub seed: u64,
    #[arg(long, default_value = "sim.csv")]
    pub out: PathBuf,
}

#[derive(Args, Debug, Serialize)]
pub struct ReproduceArgs {
    /// Figure number 1 to 6, or "all".
    #[arg(long, default_value = "all")]
    pub figure: String,
    /// Each figure writes into <out-dir>/figN.
    #[arg(long, default_value = "figures")]
    pub out_dir: PathBuf,
    #[arg(long, default_value_t = bandit_minimax::mcsim::DEFAULT_REPS)]
    pub reps: usize,
    #[arg(long, default_value_t = 42)]
    pub seed: u64,
    /// Coarse grids and a small search, for smoke runs.
    #[arg(long)]
    pub fast: bool,
}

impl ReproduceArgs {
    pub fn figures(&self) -> Result<Vec<u8>> {
        if self.figure == "all" {
            return Ok((1..=6).collect());
        }
        self.figure
            .split(',')
            .map(|f| match f.trim().parse::<u8>() {
                Ok(n @ 1..=6) => Ok(n),
                _ => Err(Error::InvalidArgument(format!("unknown figure {f:?}; expected 1-6 or all"))),
            })
            .collect()
    }
}
