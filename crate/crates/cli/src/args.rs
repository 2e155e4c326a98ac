use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Debug, Parser)]
#[command(name = "gnli", version, about = "Nonlinear interference PSD of coherent optical links")]
pub struct Cli {
    /// Worker threads; results do not depend on this value.
    #[arg(long, global = true)]
    pub threads: Option<usize>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Tabulate the link kernel K(F) and its normalized form.
    Kernel(Common),
    /// Evaluate the analytic NLI PSD.
    Psd(Common),
    /// Monte Carlo NLI PSD over random spectral lines, against the analytic PSD.
    Montecarlo(MonteCarloArgs),
    /// Monte Carlo checks of the complex Gaussian moment identities.
    Moments(MomentsArgs),
}

#[derive(Debug, Args)]
pub struct Common {
    /// TOML run configuration.
    #[arg(long)]
    pub config: PathBuf,
    /// CSV output path.
    #[arg(long)]
    pub output: PathBuf,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ModeArg {
    Rp1,
    Erp1,
}

#[derive(Debug, Args)]
pub struct MonteCarloArgs {
    #[command(flatten)]
    pub common: Common,
    #[arg(long, value_enum)]
    pub mode: Option<ModeArg>,
    /// Number of spectral lines M.
    #[arg(long)]
    pub lines: Option<usize>,
    /// Line spacing f0 in Hz.
    #[arg(long)]
    pub spacing_hz: Option<f64>,
    #[arg(long)]
    pub trials: Option<u64>,
    #[arg(long)]
    pub seed: Option<u64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum TheoremArg {
    /// Uncorrelated spectral lines of stationary processes.
    #[value(name = "1")]
    One,
    /// Permutation sum for 2k-th order moments.
    #[value(name = "2")]
    Two,
    /// Six-field moments of stationary processes.
    #[value(name = "3")]
    Three,
}

#[derive(Debug, Args)]
pub struct MomentsArgs {
    #[arg(long, value_enum)]
    pub theorem: TheoremArg,
    /// Moment order for the permutation-sum check.
    #[arg(long, default_value_t = 3)]
    pub k: usize,
    #[arg(long, default_value_t = 100_000)]
    pub trials: u64,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    /// Random ensembles for the permutation-sum check.
    #[arg(long, default_value_t = 20)]
    pub ensembles: usize,
    /// Grid size N of the stationary-process checks.
    #[arg(long, default_value_t = 32)]
    pub grid_points: usize,
    /// Optional TOML configuration; only recorded in the output header.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// CSV report path.
    #[arg(long)]
    pub output: PathBuf,
}
