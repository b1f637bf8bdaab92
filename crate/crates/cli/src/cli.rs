use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::parse;

/// Weighted graph state sensing toolkit.
///
/// Angles are degrees unless suffixed with `rad` or written with `pi`
/// (`3pi/4`).
#[derive(Parser, Debug)]
#[command(name = "wgsense", version)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,

    /// Leave the wall-clock timestamp out of the run manifest.
    #[arg(long, global = true)]
    pub no_timestamp: bool,

    /// Manifest path (default: `<first output>.manifest.json`).
    #[arg(long, global = true, value_name = "PATH")]
    pub manifest: Option<PathBuf>,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Prepare a weighted graph state and write it as JSON.
    State(StateArgs),
    /// Closed-form quantum Fisher information table.
    Qfi(QfiArgs),
    /// Search for the best observable at a graph weight.
    Optimize(OptimizeArgs),
    /// Simulate a binned sensing run and bootstrap its statistics.
    Sense(SenseArgs),
    /// Two-qubit state tomography.
    #[command(subcommand)]
    Tomo(TomoCommand),
    /// Simulate and fit an interference fringe.
    Fringe(FringeArgs),
}

#[derive(Args, Debug, Clone)]
pub struct SeedArg {
    /// RNG seed.
    #[arg(long, env = "WGSENSE_SEED", default_value_t = 0)]
    pub seed: u64,
}

#[derive(Args, Debug)]
pub struct StateArgs {
    #[arg(long, value_parser = parse::angle, allow_hyphen_values = true)]
    pub phi12: f64,
    /// Route through the optical generation pipeline.
    #[arg(long)]
    pub pipeline: bool,
    /// Depolarizing probability and phase jitter sigma.
    #[arg(long, num_args = 2, value_names = ["P", "SIGMA"], allow_hyphen_values = true)]
    pub noise: Option<Vec<String>>,
    #[command(flatten)]
    pub seed: SeedArg,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug)]
#[group(required = true, multiple = false)]
pub struct QfiSelect {
    /// Number of evenly spaced weights on [0, 180] degrees.
    #[arg(long)]
    pub grid: Option<usize>,
    #[arg(long, value_parser = parse::angle, allow_hyphen_values = true)]
    pub phi12: Option<f64>,
}

#[derive(Args, Debug)]
pub struct QfiArgs {
    #[command(flatten)]
    pub select: QfiSelect,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
pub enum SearchKind {
    Pauli,
    General,
}

#[derive(Args, Debug)]
pub struct OptimizeArgs {
    #[arg(long, value_parser = parse::angle, allow_hyphen_values = true)]
    pub phi12: f64,
    #[arg(long, value_enum, default_value = "pauli")]
    pub kind: SearchKind,
    #[arg(long, value_parser = parse::angle, default_value = "0", allow_hyphen_values = true)]
    pub theta_star: f64,
    #[command(flatten)]
    pub seed: SeedArg,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct SenseArgs {
    #[arg(long, value_parser = parse::angle, allow_hyphen_values = true)]
    pub phi12: f64,
    /// `ZY`-style Pauli pair or `axis:b1,a1,b2,a2`.
    #[arg(long, default_value = "ZY")]
    pub observable: String,
    /// Coincidences per second.
    #[arg(long, default_value_t = 150.0)]
    pub rate: f64,
    /// Seconds per bin.
    #[arg(long, default_value_t = 10.0)]
    pub duration: f64,
    #[arg(long, default_value_t = wgsense_core::stats::DEFAULT_BINS)]
    pub bins: usize,
    #[arg(long, value_parser = parse::angle, default_value = "0", allow_hyphen_values = true)]
    pub theta_star: f64,
    /// Finite-difference shift.
    #[arg(long, value_parser = parse::angle, default_value = "5")]
    pub shift: f64,
    #[arg(long, default_value_t = wgsense_core::stats::DEFAULT_REPLICATES)]
    pub replicates: usize,
    #[command(flatten)]
    pub seed: SeedArg,
    /// Report JSON.
    #[arg(long)]
    pub out: PathBuf,
    /// Raw counts CSV (default: `<out>.counts.csv`).
    #[arg(long)]
    pub counts_out: Option<PathBuf>,
}

#[derive(Subcommand, Debug)]
pub enum TomoCommand {
    /// Simulate counts for the 16 tomography settings.
    Simulate(TomoSimulateArgs),
    /// Maximum-likelihood reconstruction from a counts CSV.
    Reconstruct(TomoReconstructArgs),
}

#[derive(Args, Debug)]
pub struct TomoSimulateArgs {
    #[arg(long, value_parser = parse::angle, allow_hyphen_values = true)]
    pub phi12: f64,
    #[arg(long, num_args = 2, value_names = ["P", "SIGMA"], allow_hyphen_values = true)]
    pub noise: Option<Vec<String>>,
    #[arg(long, default_value_t = 150.0)]
    pub rate: f64,
    /// Seconds per setting.
    #[arg(long, default_value_t = 10.0)]
    pub duration: f64,
    /// Write expected counts instead of Poisson draws.
    #[arg(long)]
    pub exact: bool,
    #[command(flatten)]
    pub seed: SeedArg,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
pub enum LikelihoodArg {
    Gaussian,
    Poisson,
}

#[derive(Args, Debug)]
pub struct TomoReconstructArgs {
    /// Counts CSV as written by `tomo simulate`.
    #[arg(long = "in", value_name = "CSV")]
    pub input: PathBuf,
    /// Weight of the graph state used as fidelity target.
    #[arg(long, value_parser = parse::angle, default_value = "180", allow_hyphen_values = true)]
    pub phi12: f64,
    /// Monte Carlo resamplings for the error bars.
    #[arg(long, default_value_t = wgsense_core::tomography::DEFAULT_MC_SAMPLES)]
    pub mc: usize,
    #[arg(long, value_enum, default_value = "gaussian")]
    pub likelihood: LikelihoodArg,
    #[command(flatten)]
    pub seed: SeedArg,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Args, Debug)]
pub struct FringeArgs {
    /// Phase sweep `START:END`.
    #[arg(long, value_parser = parse::angle_range, default_value = "0:360", allow_hyphen_values = true)]
    pub varphi_range: (f64, f64),
    #[arg(long, default_value_t = 37)]
    pub steps: usize,
    #[arg(long, default_value_t = 150.0)]
    pub rate: f64,
    #[arg(long, default_value_t = 10.0)]
    pub duration: f64,
    /// Fringe contrast, emulated with white noise.
    #[arg(long, default_value_t = 1.0)]
    pub visibility: f64,
    /// Expected counts instead of Poisson draws.
    #[arg(long)]
    pub exact: bool,
    #[command(flatten)]
    pub seed: SeedArg,
    /// Sweep CSV.
    #[arg(long)]
    pub out: PathBuf,
    /// Fit JSON (default: `<out>.fit.json`).
    #[arg(long)]
    pub fit_out: Option<PathBuf>,
}
