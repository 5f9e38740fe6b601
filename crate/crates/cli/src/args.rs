use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use biased_games::OptimizerConfig;

#[derive(Debug, Parser)]
#[command(name = "biased", version, about = "Values and advantage regions of biased nonlocal games")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,

    /// Output format
    #[arg(long, global = true, value_enum, default_value_t = Format::Json)]
    pub format: Format,

    /// Write to this path instead of stdout
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Json,
    Csv,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Game {
    Chsh,
    Joint,
    Svetlichny,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Model {
    Classical,
    Quantum,
    Ns,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum BehaviorKind {
    Pr,
    Classical,
    Quantum,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Value of one game under one model
    Value(ValueArgs),
    /// Biased CHSH advantage map on an interior grid
    Region(RegionArgs),
    /// Classical and quantum Svetlichny values against p
    Curves(CurvesArgs),
    /// Bias above which the n-party Svetlichny game shows no quantum advantage
    Threshold(ThresholdArgs),
    /// Thresholds for n = 3..=n-max
    Thresholds(ThresholdsArgs),
    /// Monte Carlo play of the biased CHSH game
    Simulate(SimulateArgs),
    /// Correlator expansion of the Svetlichny expression
    Expand(ExpandArgs),
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Value(_) => "value",
            Command::Region(_) => "region",
            Command::Curves(_) => "curves",
            Command::Threshold(_) => "threshold",
            Command::Thresholds(_) => "thresholds",
            Command::Simulate(_) => "simulate",
            Command::Expand(_) => "expand",
        }
    }
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct BiasArgs {
    #[arg(long)]
    pub p: Option<f64>,
    #[arg(long)]
    pub q: Option<f64>,
    /// Joint setting distribution P00,P01,P10,P11
    #[arg(long, value_parser = parse_pij, allow_hyphen_values = true)]
    pub pij: Option<[f64; 4]>,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct OptArgs {
    /// Random starts of the multi-start optimizer
    #[arg(long, default_value_t = OptimizerConfig::default().starts)]
    pub starts: usize,
    /// Iteration budget per start
    #[arg(long, default_value_t = OptimizerConfig::default().max_iters)]
    pub iters: usize,
    /// Simplex convergence tolerance
    #[arg(long, default_value_t = OptimizerConfig::default().tol)]
    pub opt_tol: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

impl OptArgs {
    pub fn config(&self) -> OptimizerConfig {
        OptimizerConfig {
            starts: self.starts,
            max_iters: self.iters,
            tol: self.opt_tol,
            seed: self.seed,
        }
    }
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct ValueArgs {
    #[arg(long, value_enum)]
    pub game: Game,
    #[arg(long, value_enum)]
    pub model: Model,
    #[command(flatten)]
    #[serde(flatten)]
    pub bias: BiasArgs,
    /// Number of parties (svetlichny)
    #[arg(long)]
    pub n: Option<usize>,
    #[command(flatten)]
    #[serde(flatten)]
    pub opt: OptArgs,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct RegionArgs {
    /// Interior points per axis
    #[arg(long, default_value_t = 49)]
    pub grid: usize,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct CurvesArgs {
    #[arg(long)]
    pub n: usize,
    /// Points on [0.5, 1)
    #[arg(long, default_value_t = 50)]
    pub grid: usize,
    #[command(flatten)]
    #[serde(flatten)]
    pub opt: OptArgs,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct ThresholdArgs {
    #[arg(long)]
    pub n: usize,
    /// Bracket width on p
    #[arg(long, default_value_t = 1e-4)]
    pub tol: f64,
    #[command(flatten)]
    #[serde(flatten)]
    pub opt: OptArgs,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct ThresholdsArgs {
    #[arg(long, default_value_t = 8)]
    pub n_max: usize,
    #[arg(long, default_value_t = 1e-4)]
    pub tol: f64,
    #[command(flatten)]
    #[serde(flatten)]
    pub opt: OptArgs,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct SimulateArgs {
    #[arg(long, value_enum)]
    pub behavior: BehaviorKind,
    #[command(flatten)]
    #[serde(flatten)]
    pub bias: BiasArgs,
    #[arg(long, default_value_t = 100_000)]
    pub rounds: u64,
    #[command(flatten)]
    #[serde(flatten)]
    pub opt: OptArgs,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct ExpandArgs {
    #[arg(long)]
    pub n: usize,
    #[arg(long)]
    pub p: f64,
}

fn parse_pij(s: &str) -> Result<[f64; 4], String> {
    let cells: Vec<f64> = s
        .split(',')
        .map(|c| c.trim().parse::<f64>().map_err(|e| format!("{c:?}: {e}")))
        .collect::<Result<_, _>>()?;
    cells
        .try_into()
        .map_err(|v: Vec<f64>| format!("expected 4 comma-separated cells, got {}", v.len()))
}
