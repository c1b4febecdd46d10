use std::path::{Path, PathBuf};

use thiserror::Error;
use thz_pathloss::calibration::CalibrationError;
use thz_pathloss::extraction::ExtractionError;
use thz_pathloss::fitting::FitError;
use thz_pathloss::models::ModelError;
use thz_pathloss::sweep::SweepError;
use thz_pathloss::synth::SynthError;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{0}")]
    Parse(String),
    #[error("{0}")]
    RankDeficient(String),
    #[error("{0}")]
    Domain(String),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) | CliError::Parse(_) => 2,
            CliError::RankDeficient(_) => 3,
            CliError::Domain(_) => 4,
            CliError::Io { .. } => 5,
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            CliError::Usage(_) => "usage",
            CliError::Parse(_) => "parse",
            CliError::RankDeficient(_) => "rank_deficient",
            CliError::Domain(_) => "domain",
            CliError::Io { .. } => "io",
        }
    }

    /// Single-line JSON for stderr.
    pub fn to_json(&self) -> String {
        serde_json::json!({
            "error": self.kind(),
            "exit_code": self.exit_code(),
            "message": self.to_string(),
        })
        .to_string()
    }

    pub fn io(path: impl AsRef<Path>, source: std::io::Error) -> Self {
        CliError::Io {
            path: path.as_ref().to_path_buf(),
            source,
        }
    }

    /// Attaches a file name to sweep-reader errors.
    pub fn sweep(path: impl AsRef<Path>, e: SweepError) -> Self {
        let p = path.as_ref().display();
        match e {
            SweepError::Io(source) => CliError::io(path, source),
            SweepError::Calibration { .. } => CliError::Domain(format!("{p}: {e}")),
            other => CliError::Parse(format!("{p}: {other}")),
        }
    }
}

impl From<FitError> for CliError {
    fn from(e: FitError) -> Self {
        match e {
            FitError::RankDeficient { .. } | FitError::DegenerateGeometry | FitError::UnstableSlope(_) => {
                CliError::RankDeficient(e.to_string())
            }
            other => CliError::Domain(other.to_string()),
        }
    }
}

impl From<ModelError> for CliError {
    fn from(e: ModelError) -> Self {
        CliError::Domain(e.to_string())
    }
}

impl From<ExtractionError> for CliError {
    fn from(e: ExtractionError) -> Self {
        CliError::Domain(e.to_string())
    }
}

impl From<CalibrationError> for CliError {
    fn from(e: CalibrationError) -> Self {
        CliError::Domain(e.to_string())
    }
}

impl From<SynthError> for CliError {
    fn from(e: SynthError) -> Self {
        match e {
            SynthError::Fit(f) => f.into(),
            other => CliError::Domain(other.to_string()),
        }
    }
}
