use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use mmwf_core::analysis::Pooling;

use crate::config::DEFAULT_SEED;

#[derive(Debug, Parser)]
#[command(name = "mmwf", version, about = "28 GHz directional small-scale fading: synthesis and analysis")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Synthesize spatial PDP tracks from a preset or explicit fading parameters.
    Simulate(SimulateArgs),
    /// Fit fading distributions and spatial autocorrelation to track files.
    Analyze(AnalyzeArgs),
    /// Simulate, analyze and compare against the presets.
    Roundtrip(RoundtripArgs),
    /// Re-run the configuration recorded in a manifest.
    Replay(ReplayArgs),
}

#[derive(Debug, Clone, Copy, Args)]
pub struct GeometryArgs {
    /// Spacing between track positions, in millimetres.
    #[arg(long, default_value_t = 5.35)]
    pub step_mm: f64,
    /// Number of positions per track.
    #[arg(long, default_value_t = 66)]
    pub positions: usize,
    /// Excess-delay bin width, in nanoseconds.
    #[arg(long, default_value_t = 2.5)]
    pub bin_ns: f64,
    #[arg(long, default_value_t = -100.0, allow_hyphen_values = true)]
    pub noise_floor_dbm: f64,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, ValueEnum)]
pub enum PoolingArg {
    #[default]
    PerTrack,
    Global,
}

impl From<PoolingArg> for Pooling {
    fn from(p: PoolingArg) -> Self {
        match p {
            PoolingArg::PerTrack => Pooling::PerTrack,
            PoolingArg::Global => Pooling::Global,
        }
    }
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    /// Preset name, e.g. `los-vv`.
    #[arg(long, conflicts_with_all = ["k_range_db", "autocorr"])]
    pub preset: Option<String>,
    /// Per-path K range in dB, `LOW,HIGH`.
    #[arg(long, value_delimiter = ',', num_args = 1, allow_hyphen_values = true, requires = "autocorr")]
    pub k_range_db: Option<Vec<f64>>,
    /// Spatial autocorrelation constants `A,B,C` of `A*exp(-B*dx) - C`.
    #[arg(long, value_delimiter = ',', num_args = 1, allow_hyphen_values = true, requires = "k_range_db")]
    pub autocorr: Option<Vec<f64>>,
    #[arg(long, default_value_t = 1)]
    pub tracks: usize,
    #[arg(long, default_value_t = DEFAULT_SEED)]
    pub seed: u64,
    #[command(flatten)]
    pub geometry: GeometryArgs,
    /// Use the Monte Carlo correlation table instead of the closed form.
    #[arg(long)]
    pub calibrated_mapping: bool,
    /// Worker threads; 0 uses every core.
    #[arg(long, default_value_t = 0)]
    pub jobs: usize,
    #[arg(long)]
    pub out_dir: PathBuf,
}

#[derive(Debug, Args)]
pub struct AnalyzeArgs {
    /// Track files, or directories whose `track_*.csv` files are read.
    #[arg(required = true)]
    pub inputs: Vec<PathBuf>,
    #[arg(long, value_enum, default_value_t = PoolingArg::PerTrack)]
    pub pooling: PoolingArg,
    /// Also write one report per input track.
    #[arg(long)]
    pub per_track: bool,
    /// Validity threshold above the noise floor, in dB.
    #[arg(long, default_value_t = 5.0)]
    pub threshold_db: f64,
    /// Fraction of positions a delay bin must occupy.
    #[arg(long, default_value_t = 0.5)]
    pub min_occupancy: f64,
    #[arg(long, default_value_t = 0)]
    pub jobs: usize,
    #[arg(long)]
    pub out_dir: PathBuf,
}

#[derive(Debug, Args)]
pub struct RoundtripArgs {
    /// Preset to check; all six when omitted.
    #[arg(long)]
    pub preset: Option<String>,
    #[arg(long, default_value_t = 200)]
    pub tracks: usize,
    #[arg(long, default_value_t = DEFAULT_SEED)]
    pub seed: u64,
    #[command(flatten)]
    pub geometry: GeometryArgs,
    #[arg(long, value_enum, default_value_t = PoolingArg::PerTrack)]
    pub pooling: PoolingArg,
    #[arg(long)]
    pub calibrated_mapping: bool,
    #[arg(long, default_value_t = 0)]
    pub jobs: usize,
    /// Where to write reports, plot data and the manifest.
    #[arg(long)]
    pub out_dir: Option<PathBuf>,
    /// Also write the synthesized tracks.
    #[arg(long, requires = "out_dir")]
    pub write_tracks: bool,
}

#[derive(Debug, Args)]
pub struct ReplayArgs {
    pub manifest: PathBuf,
    #[arg(long)]
    pub out_dir: PathBuf,
    #[arg(long, default_value_t = 0)]
    pub jobs: usize,
}
