//! `thzpl`: ingest, calibrate, extract, fit and predict over a run directory.
//!
//! Every subcommand writes JSON (or CSV) to stdout on success. Failures are
//! reported as one JSON line on stderr with a non-zero exit code:
//! 2 parse/usage, 3 rank-deficient fit, 4 domain, 5 I/O.

pub mod commands;
pub mod error;
pub mod rundir;
pub mod synth;

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use thz_pathloss::models::presets::NominalBand;
use thz_pathloss::types::{FrequencyMode, PathLossKind, Scenario};

pub use error::CliError;

#[derive(Debug, Parser)]
#[command(name = "thzpl", version, about = "Sub-THz path-loss campaign pipeline")]
pub struct Cli {
    /// Run directory holding manifest.json, scans/, samples/ and fits/.
    #[arg(long, global = true, env = "THZPL_RUN_DIR")]
    pub run_dir: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Parse sweep CSV files into the run directory.
    Ingest {
        #[arg(long, required = true, num_args = 1..)]
        input: Vec<PathBuf>,
    },
    /// Apply calibration records to every ingested scan.
    Calibrate {
        /// Extra sweep CSV files holding calibration records.
        #[arg(long, num_args = 1..)]
        input: Vec<PathBuf>,
        /// Use this record for every scan instead of matching by band.
        #[arg(long)]
        cal: Option<String>,
    },
    /// Reduce scans to path-loss samples.
    Extract {
        /// Largest beam count for the coherent and non-coherent combinations.
        #[arg(long, default_value_t = 5, value_parser = clap::value_parser!(u32).range(1..))]
        beams: u32,
        #[arg(long)]
        noise_gate: bool,
        #[arg(long, value_enum, default_value_t = PresetFreq::Nominal)]
        preset_freq: PresetFreq,
    },
    /// Fit a path-loss model to extracted samples.
    Fit {
        #[arg(long, value_enum)]
        model: ModelArg,
        #[command(flatten)]
        kind: KindArgs,
        #[arg(long, value_enum, default_value_t = BandArg::All)]
        band: BandArg,
        #[arg(long)]
        scenario: Option<Scenario>,
    },
    /// Path loss from a published scenario preset.
    Predict {
        #[arg(long)]
        scenario: Scenario,
        #[arg(long, value_enum)]
        model: ModelArg,
        #[command(flatten)]
        kind: KindArgs,
        /// Band of a CI preset.
        #[arg(long, value_enum, default_value_t = BandArg::B140)]
        band: BandArg,
        #[arg(long)]
        distance: f64,
        /// Frequency in GHz for ABG/CIF presets.
        #[arg(long)]
        freq: Option<f64>,
        /// Add one seeded shadow-fading draw.
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long, value_enum, default_value_t = PresetFreq::Nominal)]
        preset_freq: PresetFreq,
    },
    /// Print the published presets as JSON.
    Presets,
    /// Write a synthetic campaign as sweep CSV.
    Synth(SynthArgs),
}

#[derive(Debug, Args)]
pub struct KindArgs {
    /// best, omni, coherent or noncoherent (also coherent:N).
    #[arg(long, default_value = "best")]
    pub kind: String,
    /// Beam count N for coherent and non-coherent kinds.
    #[arg(long, value_parser = clap::value_parser!(u32).range(1..))]
    pub beams: Option<u32>,
}

impl KindArgs {
    pub fn resolve(&self) -> Result<PathLossKind, CliError> {
        let kind = match (self.kind.as_str(), self.beams) {
            ("coherent", Some(n)) => PathLossKind::Coherent(n as usize),
            ("noncoherent", Some(n)) => PathLossKind::NonCoherent(n as usize),
            ("coherent" | "noncoherent", None) => {
                return Err(CliError::Usage(format!("--kind {} needs --beams N", self.kind)))
            }
            (other, _) => other.parse::<PathLossKind>().map_err(|e| CliError::Usage(e.to_string()))?,
        };
        if let (Some(n), PathLossKind::Coherent(m) | PathLossKind::NonCoherent(m)) = (self.beams, kind) {
            if n as usize != m {
                return Err(CliError::Usage(format!("--beams {n} contradicts --kind {}", self.kind)));
            }
        }
        Ok(kind)
    }
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    #[arg(long)]
    pub output: PathBuf,
    #[arg(long)]
    pub seed: u64,
    #[arg(long, default_value = "Meeting room")]
    pub scenario: Scenario,
    /// free-space or room.
    #[arg(long, default_value = "free-space")]
    pub env: synth::Environment,
    #[arg(long, value_enum, default_value_t = BandArg::B140)]
    pub band: BandArg,
    /// Explicit placement distances in metres (comma separated).
    #[arg(long, value_delimiter = ',')]
    pub distances: Vec<f64>,
    /// Evenly spaced placements between --min-distance and --max-distance.
    #[arg(long, default_value_t = 10)]
    pub placements: usize,
    #[arg(long, default_value_t = 1.0)]
    pub min_distance: f64,
    #[arg(long, default_value_t = 20.0)]
    pub max_distance: f64,
    #[arg(long, default_value_t = 36)]
    pub azimuths: usize,
    #[arg(long, default_value_t = 5)]
    pub elevations: usize,
    /// Frequency points per band at the 10 MHz sounder step (default: full sweep).
    #[arg(long)]
    pub points: Option<usize>,
    /// Embed a synthetic sounding-system response and emit its calibration record.
    #[arg(long)]
    pub system_response: bool,
    #[arg(long)]
    pub no_noise: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ModelArg {
    Ci,
    Abg,
    Cif,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum BandArg {
    #[value(name = "140")]
    B140,
    #[value(name = "220")]
    B220,
    All,
}

impl BandArg {
    pub fn bands(self) -> Vec<NominalBand> {
        match self {
            BandArg::B140 => vec![NominalBand::G140],
            BandArg::B220 => vec![NominalBand::G220],
            BandArg::All => vec![NominalBand::G140, NominalBand::G220],
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            BandArg::B140 => "140",
            BandArg::B220 => "220",
            BandArg::All => "all",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum PresetFreq {
    Nominal,
    Center,
}

impl From<PresetFreq> for FrequencyMode {
    fn from(p: PresetFreq) -> Self {
        match p {
            PresetFreq::Nominal => FrequencyMode::Nominal,
            PresetFreq::Center => FrequencyMode::Center,
        }
    }
}

/// Runs one parsed command and returns its stdout payload.
pub fn run(cli: Cli) -> Result<String, CliError> {
    let run_dir = || {
        cli.run_dir
            .clone()
            .map(rundir::RunDir::new)
            .ok_or_else(|| CliError::Usage("--run-dir (or THZPL_RUN_DIR) is required".into()))
    };
    match &cli.command {
        Command::Ingest { input } => commands::ingest(&run_dir()?, input),
        Command::Calibrate { input, cal } => commands::calibrate(&run_dir()?, input, cal.as_deref()),
        Command::Extract {
            beams,
            noise_gate,
            preset_freq,
        } => commands::extract(&run_dir()?, *beams as usize, *noise_gate, (*preset_freq).into()),
        Command::Fit {
            model,
            kind,
            band,
            scenario,
        } => commands::fit(&run_dir()?, *model, kind.resolve()?, *band, *scenario),
        Command::Predict {
            scenario,
            model,
            kind,
            band,
            distance,
            freq,
            seed,
            preset_freq,
        } => commands::predict(&commands::PredictRequest {
            scenario: *scenario,
            model: *model,
            kind: kind.resolve()?,
            band: *band,
            distance_m: *distance,
            frequency_ghz: *freq,
            seed: *seed,
            mode: (*preset_freq).into(),
        }),
        Command::Presets => Ok(thz_pathloss::models::presets::presets_json()),
        Command::Synth(args) => commands::synth(args),
    }
}
