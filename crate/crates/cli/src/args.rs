use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use polystap_core::FastCovariance;

#[derive(Debug, Parser)]
#[command(
    name = "polystap",
    version,
    about = "Polyphase MIMO STAP waveform design"
)]
pub struct Cli {
    /// Worker threads for candidate scoring and the oracle (default: all cores).
    #[arg(long, global = true)]
    pub threads: Option<usize>,

    /// Omit timestamps and wall-clock times so that identical inputs give
    /// byte-identical outputs.
    #[arg(long, global = true)]
    pub deterministic: bool,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Design a waveform and synthesize polyphase codes from it.
    Design(DesignArgs),
    /// SINR of a fixed waveform over a grid of target Doppler values.
    Sweep(SweepArgs),
    /// Run the randomized property suites.
    Validate(ValidateArgs),
    /// Exhaustive search over all D-ary waveforms of a small scenario.
    Oracle(OracleArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum FastCov {
    Auto,
    On,
    Off,
}

impl From<FastCov> for FastCovariance {
    fn from(v: FastCov) -> Self {
        match v {
            FastCov::Auto => FastCovariance::Auto,
            FastCov::On => FastCovariance::On,
            FastCov::Off => FastCovariance::Off,
        }
    }
}

#[derive(Debug, Args)]
pub struct DesignArgs {
    #[arg(long)]
    pub scenario: PathBuf,

    /// Rank of the waveform factor (default: ⌊√(L·N_T + 1)⌋ − 1).
    #[arg(long)]
    pub rank: Option<usize>,

    /// Comma-separated alphabet sizes.
    #[arg(long, value_delimiter = ',', default_value = "2")]
    pub alphabet: Vec<u32>,

    #[arg(long, default_value_t = 0)]
    pub seed: u64,

    /// Randomization draws per alphabet.
    #[arg(long, default_value_t = 100)]
    pub draws: usize,

    /// 1: relaxed ratio at the designed filter; 2: true SINR.
    #[arg(long, default_value_t = 2, value_parser = clap::value_parser!(u8).range(1..=2))]
    pub selection: u8,

    #[arg(long = "fast-cov", value_enum, default_value_t = FastCov::Auto)]
    pub fast_cov: FastCov,

    /// Override the target's normalized Doppler from the scenario file.
    #[arg(long, allow_hyphen_values = true)]
    pub target_doppler: Option<f64>,

    #[arg(long, default_value_t = 200)]
    pub max_outer: usize,

    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    #[arg(long)]
    pub scenario: PathBuf,

    /// Waveform CSV written by `design`, or `barker`.
    #[arg(long)]
    pub waveform: String,

    #[arg(long, allow_hyphen_values = true, default_value_t = -0.5)]
    pub f_min: f64,

    #[arg(long, allow_hyphen_values = true, default_value_t = 0.5)]
    pub f_max: f64,

    #[arg(long, default_value_t = 101)]
    pub points: usize,

    /// Recorded in the outputs; the sweep itself is not random.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,

    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct ValidateArgs {
    /// Base trial count; the expensive suites run a fraction of it.
    #[arg(long, default_value_t = 100)]
    pub trials: usize,

    #[arg(long, default_value_t = 0)]
    pub seed: u64,

    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct OracleArgs {
    #[arg(long)]
    pub scenario: PathBuf,

    #[arg(long, default_value_t = 2)]
    pub alphabet: u32,

    /// `report.json` from a design run; adds the gap to its synthesized SINR.
    #[arg(long)]
    pub design: Option<PathBuf>,

    /// Enumerate one waveform per global-phase class.
    #[arg(long)]
    pub phase_classes: bool,

    #[arg(long, default_value_t = 0)]
    pub seed: u64,

    #[arg(long)]
    pub out: PathBuf,
}
