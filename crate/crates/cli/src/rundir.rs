//! Run directory: `manifest.json`, `scans/`, `samples/`, `fits/`.
//!
//! Scans are archived one per file in the sweep CSV format under
//! `scans/raw/` (and `scans/calibrated/` once calibrated); calibration
//! records ingested alongside them go to `scans/calibrations.csv`.
//! Writers hold an advisory `.lock` file for the duration of a command.

use std::fs::{self, File, OpenOptions};
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thz_pathloss::calibration::CalibrationRecord;
use thz_pathloss::sweep::{read_sweep, write_sweep, SweepFile};
use thz_pathloss::types::{DirectionalScan, PathLossKind, PathLossSample, Scenario};

use crate::error::CliError;

pub const MANIFEST_SCHEMA: &str = "thzpl-run/1";
pub const SAMPLES_FILE: &str = "samples/samples.csv";
pub const CALIBRATIONS_FILE: &str = "scans/calibrations.csv";
const SAMPLE_HEADER: [&str; 6] = ["scan_id", "scenario", "distance_m", "frequency_ghz", "kind", "pl_db"];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScanEntry {
    pub scan_id: String,
    pub scenario: Scenario,
    pub tx_id: String,
    pub rx_id: String,
    pub distance_m: f64,
    pub band: String,
    pub n_points: usize,
    pub n_azimuth: usize,
    pub n_elevation: usize,
    pub raw: String,
    pub calibrated: Option<String>,
    pub calibration: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CalibrationEntry {
    pub name: String,
    pub band: String,
    pub n_points: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub schema: String,
    pub scans: Vec<ScanEntry>,
    pub calibrations: Vec<CalibrationEntry>,
}

impl Manifest {
    pub fn new() -> Self {
        Self {
            schema: MANIFEST_SCHEMA.to_string(),
            scans: Vec::new(),
            calibrations: Vec::new(),
        }
    }
}

impl Default for Manifest {
    fn default() -> Self {
        Self::new()
    }
}

/// Held while a command writes into the run directory.
#[derive(Debug)]
pub struct RunLock {
    path: PathBuf,
}

impl RunLock {
    pub fn acquire(dir: &Path) -> Result<Self, CliError> {
        fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
        let path = dir.join(".lock");
        match OpenOptions::new().write(true).create_new(true).open(&path) {
            Ok(mut f) => {
                let _ = writeln!(f, "{}", std::process::id());
                Ok(Self { path })
            }
            Err(e) if e.kind() == std::io::ErrorKind::AlreadyExists => Err(CliError::io(
                &path,
                std::io::Error::new(e.kind(), "run directory is locked by another process"),
            )),
            Err(e) => Err(CliError::io(&path, e)),
        }
    }
}

impl Drop for RunLock {
    fn drop(&mut self) {
        let _ = fs::remove_file(&self.path);
    }
}

#[derive(Debug, Clone)]
pub struct RunDir {
    root: PathBuf,
}

impl RunDir {
    pub fn new(root: impl Into<PathBuf>) -> Self {
        Self { root: root.into() }
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    pub fn path(&self, rel: &str) -> PathBuf {
        self.root.join(rel)
    }

    pub fn lock(&self) -> Result<RunLock, CliError> {
        RunLock::acquire(&self.root)
    }

    pub fn ensure_dir(&self, rel: &str) -> Result<PathBuf, CliError> {
        let p = self.path(rel);
        fs::create_dir_all(&p).map_err(|e| CliError::io(&p, e))?;
        Ok(p)
    }

    /// Removes and recreates `rel`.
    pub fn reset_dir(&self, rel: &str) -> Result<PathBuf, CliError> {
        let p = self.path(rel);
        if p.exists() {
            fs::remove_dir_all(&p).map_err(|e| CliError::io(&p, e))?;
        }
        self.ensure_dir(rel)
    }

    pub fn read_manifest(&self) -> Result<Manifest, CliError> {
        let p = self.path("manifest.json");
        let text = fs::read_to_string(&p).map_err(|e| CliError::io(&p, e))?;
        let m: Manifest = serde_json::from_str(&text).map_err(|e| CliError::Parse(format!("{}: {e}", p.display())))?;
        if m.schema != MANIFEST_SCHEMA {
            return Err(CliError::Parse(format!(
                "{}: manifest schema '{}' is not {MANIFEST_SCHEMA}",
                p.display(),
                m.schema
            )));
        }
        Ok(m)
    }

    pub fn write_manifest(&self, m: &Manifest) -> Result<(), CliError> {
        let text = serde_json::to_string_pretty(m).expect("manifest serializes") + "\n";
        self.write_text("manifest.json", &text)
    }

    pub fn write_text(&self, rel: &str, text: &str) -> Result<(), CliError> {
        let p = self.path(rel);
        if let Some(parent) = p.parent() {
            fs::create_dir_all(parent).map_err(|e| CliError::io(parent, e))?;
        }
        fs::write(&p, text).map_err(|e| CliError::io(&p, e))
    }

    pub fn write_sweep(&self, rel: &str, scans: &[DirectionalScan], cals: &[CalibrationRecord]) -> Result<(), CliError> {
        let p = self.path(rel);
        if let Some(parent) = p.parent() {
            fs::create_dir_all(parent).map_err(|e| CliError::io(parent, e))?;
        }
        write_sweep_file(&p, scans, cals)
    }

    pub fn read_sweep(&self, rel: &str) -> Result<SweepFile, CliError> {
        read_sweep_file(&self.path(rel))
    }

    /// The calibrated archive of a scan when present, otherwise the raw one.
    pub fn load_scan(&self, entry: &ScanEntry) -> Result<DirectionalScan, CliError> {
        let rel = entry.calibrated.as_deref().unwrap_or(&entry.raw);
        let mut file = self.read_sweep(rel)?;
        match file.scans.pop() {
            Some(scan) if file.scans.is_empty() && scan.scan_id == entry.scan_id => Ok(scan),
            _ => Err(CliError::Parse(format!(
                "{}: expected exactly scan {}",
                self.path(rel).display(),
                entry.scan_id
            ))),
        }
    }

    pub fn write_samples(&self, samples: &[PathLossSample]) -> Result<(), CliError> {
        let p = self.path(SAMPLES_FILE);
        if let Some(parent) = p.parent() {
            fs::create_dir_all(parent).map_err(|e| CliError::io(parent, e))?;
        }
        let file = File::create(&p).map_err(|e| CliError::io(&p, e))?;
        let mut w = csv::Writer::from_writer(BufWriter::new(file));
        let io = |e: csv::Error| CliError::io(&p, e.into());
        w.write_record(SAMPLE_HEADER).map_err(io)?;
        for s in samples {
            w.write_record([
                s.scan_id.clone(),
                s.scenario.name().to_string(),
                s.distance_m.to_string(),
                s.frequency_ghz.to_string(),
                s.kind.to_string(),
                s.pl_db.to_string(),
            ])
            .map_err(io)?;
        }
        w.flush().map_err(|e| CliError::io(&p, e))
    }

    pub fn read_samples(&self) -> Result<Vec<PathLossSample>, CliError> {
        let p = self.path(SAMPLES_FILE);
        let file = File::open(&p).map_err(|e| CliError::io(&p, e))?;
        let mut r = csv::Reader::from_reader(BufReader::new(file));
        let parse = |line: u64, msg: String| CliError::Parse(format!("{}: line {line}: {msg}", p.display()));
        let header = r.headers().map_err(|e| parse(1, e.to_string()))?.clone();
        if header.iter().collect::<Vec<_>>() != SAMPLE_HEADER {
            return Err(parse(1, format!("header must be '{}'", SAMPLE_HEADER.join(","))));
        }
        let mut out = Vec::new();
        for rec in r.records() {
            let rec = rec.map_err(|e| parse(e.position().map_or(0, |p| p.line()), e.to_string()))?;
            let line = rec.position().map_or(0, |p| p.line());
            let num = |k: usize| rec[k].parse::<f64>().map_err(|_| parse(line, format!("'{}' is not a number", &rec[k])));
            let scenario = rec[1].parse::<Scenario>().map_err(|e| parse(line, e.to_string()))?;
            let kind = rec[4].parse::<PathLossKind>().map_err(|e| parse(line, e.to_string()))?;
            out.push(PathLossSample {
                scan_id: rec[0].to_string(),
                scenario,
                distance_m: num(2)?,
                frequency_ghz: num(3)?,
                kind,
                pl_db: num(5)?,
            });
        }
        Ok(out)
    }
}

pub fn read_sweep_file(path: &Path) -> Result<SweepFile, CliError> {
    let file = File::open(path).map_err(|e| CliError::io(path, e))?;
    read_sweep(file, None).map_err(|e| CliError::sweep(path, e))
}

pub fn write_sweep_file(path: &Path, scans: &[DirectionalScan], cals: &[CalibrationRecord]) -> Result<(), CliError> {
    let file = File::create(path).map_err(|e| CliError::io(path, e))?;
    let mut w = BufWriter::new(file);
    write_sweep(&mut w, scans, cals).map_err(|e| CliError::io(path, e))?;
    w.flush().map_err(|e| CliError::io(path, e))
}
