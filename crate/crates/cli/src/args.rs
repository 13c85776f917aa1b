use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

#[derive(Debug, Parser)]
#[command(name = "clockstab", version, about = "Phase noise to long-term frequency accuracy analysis")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Sweep jitter and ADEV metrics of a phase-noise profile.
    Analyze(AnalyzeArgs),
    /// Synthesize time-domain phase paths from a profile.
    Synth(SynthArgs),
    /// Run a PLL calibration ensemble and report release-frequency errors.
    Pll(PllArgs),
    /// Evaluate reference presets against a ppm requirement.
    Feasibility(FeasibilityArgs),
    /// Render curve CSVs as a log-log SVG figure.
    Plot(PlotArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
    Md,
}

impl Format {
    pub fn ext(self) -> &'static str {
        match self {
            Format::Csv => "csv",
            Format::Json => "json",
            Format::Md => "md",
        }
    }
}

/// A profile JSON file or a builtin preset name.
#[derive(Debug, Clone, Args, Serialize)]
#[group(required = true, multiple = false)]
pub struct ProfileSource {
    /// Phase-noise profile JSON.
    #[arg(long)]
    pub profile: Option<PathBuf>,
    /// Builtin preset: rtc_div_xo, rc_osc, rf_single_tone, rf_gfsk.
    #[arg(long)]
    pub preset: Option<String>,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct AnalyzeArgs {
    #[command(flatten)]
    pub source: ProfileSource,
    #[arg(long, default_value_t = 1.0)]
    pub nmin: f64,
    #[arg(long, default_value_t = 1e6)]
    pub nmax: f64,
    /// Averaging lengths per decade.
    #[arg(long, default_value_t = 10)]
    pub points: usize,
    /// Override the profile's lower integration bound.
    #[arg(long)]
    pub fmin_hz: Option<f64>,
    /// Comma-separated metrics: npj, npaj, cc, adev, adev_from_cc.
    #[arg(long, value_delimiter = ',', default_value = "npaj,adev")]
    pub metrics: Vec<String>,
    #[arg(long, default_value = ".")]
    pub out: PathBuf,
    /// Curve output format.
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    pub format: Format,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct SynthArgs {
    #[command(flatten)]
    pub source: ProfileSource,
    /// Samples (periods) per path.
    #[arg(long, default_value_t = 1 << 20)]
    pub samples: usize,
    /// First seed; path i uses seed + i. Drawn at random and recorded when omitted.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Number of paths.
    #[arg(long, default_value_t = 1)]
    pub ensemble: usize,
    /// Lowest synthesized frequency. Defaults to the profile's, raised to
    /// what the path length can resolve when flicker terms are present.
    #[arg(long)]
    pub fmin_hz: Option<f64>,
    #[arg(long, default_value_t = 1.0)]
    pub nmin: f64,
    /// Largest ADEV averaging length; defaults to a quarter of the path.
    #[arg(long)]
    pub nmax: Option<f64>,
    #[arg(long, default_value_t = 10)]
    pub points: usize,
    #[arg(long, default_value = ".")]
    pub out: PathBuf,
    /// ADEV estimate output format.
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    pub format: Format,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum PllMode {
    Inst,
    Avg,
    Both,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct PllArgs {
    /// Reference noise profile JSON, rescaled to the reference frequency.
    /// Without it the reference has white FM at -120 dBc/Hz at 10 kHz.
    #[arg(long)]
    pub profile: Option<PathBuf>,
    #[arg(long, default_value_t = 40e6)]
    pub fref_hz: f64,
    #[arg(long, default_value_t = 60.0)]
    pub fcw: f64,
    /// DCO gain per LSB.
    #[arg(long, default_value_t = 1e3)]
    pub kdco_hz: f64,
    /// Proportional loop gain in (0, 1].
    #[arg(long, default_value_t = 1.0)]
    pub loop_gain: f64,
    /// APU averaging window in reference cycles.
    #[arg(long, default_value_t = 16)]
    pub window: usize,
    /// Extra comma-separated windows for an averaged-mode sweep.
    #[arg(long, value_delimiter = ',')]
    pub windows: Vec<usize>,
    #[arg(long, default_value_t = 500)]
    pub ensemble: usize,
    /// First seed; member i uses seed + i. Drawn at random and recorded when omitted.
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long, value_enum, default_value_t = PllMode::Both)]
    pub mode: PllMode,
    /// Lowest reference-noise frequency.
    #[arg(long, default_value_t = 1e3)]
    pub fmin_hz: f64,
    #[arg(long, default_value_t = 100_000)]
    pub max_lock_cycles: usize,
    /// Also write the per-cycle trace of the first member for this many cycles.
    #[arg(long, default_value_t = 0)]
    pub trace_cycles: usize,
    #[arg(long, default_value = ".")]
    pub out: PathBuf,
    /// Summary format.
    #[arg(long, value_enum, default_value_t = Format::Json)]
    pub format: Format,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct FeasibilityArgs {
    /// Builtin presets to evaluate; all of them when neither this nor --profile is given.
    #[arg(long, value_delimiter = ',')]
    pub preset: Vec<String>,
    /// Extra profile JSON files, named by file stem.
    #[arg(long)]
    pub profile: Vec<PathBuf>,
    /// Requirement JSON; overrides --ppm and --target-hz.
    #[arg(long)]
    pub requirement: Option<PathBuf>,
    #[arg(long, default_value_t = 60.0)]
    pub ppm: f64,
    #[arg(long, default_value_t = clockstab::feasibility::PRESET_TARGET_HZ)]
    pub target_hz: f64,
    /// Override every profile's lower integration bound.
    #[arg(long)]
    pub fmin_hz: Option<f64>,
    #[arg(long, default_value = ".")]
    pub out: PathBuf,
    #[arg(long, value_enum, default_value_t = Format::Md)]
    pub format: Format,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct PlotArgs {
    /// Curve CSVs (`n,tau_s,sigma`). Files whose name contains `adev` go to
    /// the ADEV panel, the rest to the jitter panel.
    #[arg(required = true)]
    pub curves: Vec<PathBuf>,
    /// Requirement line on the ADEV panel, in ppm.
    #[arg(long)]
    pub ppm: Option<f64>,
    /// Requirement line as a raw value; overrides --ppm.
    #[arg(long)]
    pub threshold: Option<f64>,
    #[arg(long, default_value = "plot.svg")]
    pub name: String,
    #[arg(long)]
    pub title: Option<String>,
    #[arg(long, default_value = ".")]
    pub out: PathBuf,
}
