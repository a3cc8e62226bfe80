use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};

#[derive(Debug, Parser)]
#[command(name = "spinbath", version, about = "Central-spin echo decay in a 13C nuclear bath")]
pub struct Cli {
    #[command(flatten)]
    pub common: Common,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args, Default)]
pub struct Common {
    /// TOML config file; flags override its values.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Output directory [default: $SPINBATH_OUT_DIR, else .]
    #[arg(long, global = true)]
    pub out_dir: Option<PathBuf>,
    #[arg(long, global = true, value_enum)]
    pub format: Option<Format>,
    /// Worker threads; 0 uses every core. Never changes results.
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Validate the config and print it with the constants table, without computing.
    #[arg(long, global = true)]
    pub dry_run: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Central {
    P1,
    Nv,
    Bare,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Placement {
    Lattice,
    Continuum,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FitModel {
    Exponential,
    Gaussian,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Transition table of the central spin.
    Spectrum(SpectrumArgs),
    /// Ensemble-averaged echo signal.
    Echo(EchoArgs),
    /// Echo signal over a list of field magnitudes.
    Scan(ScanArgs),
    /// Conditional 13C precession frequencies of one bath.
    LarmorDist(LarmorArgs),
    /// Closed-form ensemble statistics.
    Stats(StatsArgs),
    /// Parse a pulse-sequence file and print its canonical form.
    Parse(ParseArgs),
    /// Print every physical constant as JSON.
    DumpConstants,
}

/// Central-spin options shared by the physics commands.
#[derive(Debug, Args, Default)]
pub struct SystemArgs {
    #[arg(long, value_enum)]
    pub central: Option<Central>,
    /// on-axis, off-axis (= off-axis-1), off-axis-2 or off-axis-3.
    #[arg(long)]
    pub jt: Option<String>,
    /// 14N line of the P1 centre: -1, 0, 1 or thermal.
    #[arg(long, allow_hyphen_values = true)]
    pub nitrogen: Option<String>,
}

#[derive(Debug, Args, Default)]
pub struct BathArgs {
    /// Bath spins per bath.
    #[arg(long)]
    pub spins: Option<usize>,
    /// 13C fraction of carbon sites.
    #[arg(long)]
    pub abundance: Option<f64>,
    /// nm
    #[arg(long)]
    pub min_radius: Option<f64>,
    #[arg(long, value_enum)]
    pub placement: Option<Placement>,
}

#[derive(Debug, Args, Default)]
pub struct SimArgs {
    #[command(flatten)]
    pub system: SystemArgs,
    #[command(flatten)]
    pub bath: BathArgs,
    /// Maximum cluster size.
    #[arg(long)]
    pub g: Option<usize>,
    /// Number of baths in the ensemble.
    #[arg(long)]
    pub n_baths: Option<usize>,
    /// Per-arm delay grid `start:stop:count`, e.g. `0:40us:200`. Bare numbers are μs.
    #[arg(long)]
    pub tau: Option<String>,
    /// Preset (hahn, cpmg, xy8, cpmg-4, ...), sequence text, or @file.
    #[arg(long)]
    pub sequence: Option<String>,
    /// Repeat count for cpmg and xy8.
    #[arg(long)]
    pub n: Option<u32>,
    /// Write every bath's signal next to the average.
    #[arg(long)]
    pub per_bath: bool,
}

#[derive(Debug, Args, Default)]
pub struct SpectrumArgs {
    #[arg(long, value_enum)]
    pub central: Option<Central>,
    /// Field magnitude along [111], G.
    #[arg(long, allow_negative_numbers = true)]
    pub b: Option<f64>,
    /// Orientation to tabulate, or `all`.
    #[arg(long)]
    pub jt: Option<String>,
}

#[derive(Debug, Args, Default)]
pub struct EchoArgs {
    #[command(flatten)]
    pub sim: SimArgs,
    /// Field magnitude along [111], G.
    #[arg(long, allow_negative_numbers = true)]
    pub b: Option<f64>,
    /// Fit T2 to the revival envelope.
    #[arg(long, value_enum)]
    pub fit: Option<FitModel>,
}

#[derive(Debug, Args, Default)]
pub struct ScanArgs {
    #[command(flatten)]
    pub sim: SimArgs,
    /// Fields `start:stop:count` or a comma list, G.
    #[arg(long, allow_hyphen_values = true)]
    pub b: Option<String>,
}

#[derive(Debug, Args, Default)]
pub struct LarmorArgs {
    #[command(flatten)]
    pub system: SystemArgs,
    #[command(flatten)]
    pub bath: BathArgs,
    #[arg(long, allow_negative_numbers = true)]
    pub b: Option<f64>,
    /// fd, a bin count, or width:<Hz>.
    #[arg(long)]
    pub bins: Option<String>,
    /// Which ensemble member to use; its seed matches `echo`.
    #[arg(long)]
    pub bath_index: Option<u64>,
}

#[derive(Debug, Args, Default)]
pub struct StatsArgs {
    /// Electron concentration, ppm of carbon sites.
    #[arg(long, allow_negative_numbers = true, conflicts_with = "density")]
    pub ppm: Option<f64>,
    /// Electron number density, cm^-3.
    #[arg(long, allow_negative_numbers = true)]
    pub density: Option<f64>,
    /// Neighbour index.
    #[arg(long)]
    pub k: Option<u32>,
    /// Angular factor 1 - 3cos²θ of the coupling.
    #[arg(long, allow_negative_numbers = true, conflicts_with = "theta_deg")]
    pub angular: Option<f64>,
    /// Polar angle instead of an angular factor, degrees.
    #[arg(long, allow_negative_numbers = true)]
    pub theta_deg: Option<f64>,
    /// Instantaneous-diffusion time constant, μs.
    #[arg(long, allow_negative_numbers = true)]
    pub td_us: Option<f64>,
    /// Field for the bare 13C Larmor frequency, G.
    #[arg(long, allow_negative_numbers = true)]
    pub b: Option<f64>,
}

#[derive(Debug, Args)]
pub struct ParseArgs {
    pub file: PathBuf,
    /// Only validate and print; write nothing.
    #[arg(long)]
    pub check: bool,
}
