use std::collections::BTreeMap;
use std::path::PathBuf;

use serde::Serialize;
use thz_pathloss::calibration::{calibrate as apply_calibration, CalibrationRecord};
use thz_pathloss::extraction::{extract_samples, ExtractOptions};
use thz_pathloss::fitting::{fit_abg, fit_ci, fit_cif, report_json, Dataset, FitReport};
use thz_pathloss::models::presets::{preset, NominalBand};
use thz_pathloss::models::PathLossModel;
use thz_pathloss::types::{FrequencyMode, PathLossKind, PathLossSample, Scenario};

use crate::error::CliError;
use crate::rundir::{CalibrationEntry, Manifest, RunDir, ScanEntry, CALIBRATIONS_FILE, SAMPLES_FILE};
use crate::synth::{generate, linspace, SynthOptions};
use crate::{BandArg, ModelArg, SynthArgs};

fn json<T: Serialize>(value: &T) -> String {
    serde_json::to_string_pretty(value).expect("output serializes")
}

fn raw_path(k: usize) -> String {
    format!("scans/raw/{k:04}.csv")
}

fn calibrated_path(k: usize) -> String {
    format!("scans/calibrated/{k:04}.csv")
}

pub fn ingest(run: &RunDir, inputs: &[PathBuf]) -> Result<String, CliError> {
    let mut scans = Vec::new();
    let mut cals: Vec<CalibrationRecord> = Vec::new();
    for path in inputs {
        let file = crate::rundir::read_sweep_file(path)?;
        scans.extend(file.scans);
        cals.extend(file.calibrations);
    }
    let mut seen = std::collections::HashSet::new();
    for id in scans.iter().map(|s| s.scan_id.as_str()).chain(cals.iter().map(|c| c.name.as_str())) {
        if !seen.insert(id) {
            return Err(CliError::Parse(format!("duplicate scan or calibration id '{id}'")));
        }
    }

    let _lock = run.lock()?;
    run.reset_dir("scans")?;
    run.reset_dir("samples")?;
    run.reset_dir("fits")?;
    let mut manifest = Manifest::new();
    for (k, scan) in scans.iter().enumerate() {
        let rel = raw_path(k);
        run.write_sweep(&rel, std::slice::from_ref(scan), &[])?;
        let (n_az, n_el, n_f) = scan.s21.dims();
        manifest.scans.push(ScanEntry {
            scan_id: scan.scan_id.clone(),
            scenario: scan.scenario,
            tx_id: scan.tx_id.clone(),
            rx_id: scan.rx_id.clone(),
            distance_m: scan.distance_m,
            band: scan.config.band.label().to_string(),
            n_points: n_f,
            n_azimuth: n_az,
            n_elevation: n_el,
            raw: rel,
            calibrated: None,
            calibration: None,
        });
    }
    store_calibrations(run, &mut manifest, &cals)?;
    run.write_manifest(&manifest)?;
    Ok(json(&manifest))
}

fn store_calibrations(run: &RunDir, manifest: &mut Manifest, cals: &[CalibrationRecord]) -> Result<(), CliError> {
    manifest.calibrations = cals
        .iter()
        .map(|c| CalibrationEntry {
            name: c.name.clone(),
            band: c.band().label().to_string(),
            n_points: c.band().n_points(),
        })
        .collect();
    if !cals.is_empty() {
        run.write_sweep(CALIBRATIONS_FILE, &[], cals)?;
    }
    Ok(())
}

#[derive(Serialize)]
struct CalibrateSummary<'a> {
    calibrated: usize,
    records: BTreeMap<&'a str, usize>,
}

pub fn calibrate(run: &RunDir, inputs: &[PathBuf], name: Option<&str>) -> Result<String, CliError> {
    let _lock = run.lock()?;
    let mut manifest = run.read_manifest()?;
    let mut records = if manifest.calibrations.is_empty() {
        Vec::new()
    } else {
        run.read_sweep(CALIBRATIONS_FILE)?.calibrations
    };
    for path in inputs {
        for rec in crate::rundir::read_sweep_file(path)?.calibrations {
            if records.iter().any(|r| r.name == rec.name) {
                return Err(CliError::Parse(format!("duplicate calibration record '{}'", rec.name)));
            }
            records.push(rec);
        }
    }
    if records.is_empty() {
        return Err(CliError::Domain("no calibration records ingested or supplied".into()));
    }
    if let Some(n) = name {
        if !records.iter().any(|r| r.name == n) {
            return Err(CliError::Domain(format!("unknown calibration record '{n}'")));
        }
    }

    run.reset_dir("scans/calibrated")?;
    let mut used: BTreeMap<&str, usize> = BTreeMap::new();
    for (k, entry) in manifest.scans.iter_mut().enumerate() {
        let raw = run.read_sweep(&entry.raw)?.scans.pop().ok_or_else(|| {
            CliError::Parse(format!("{}: no scan", run.path(&entry.raw).display()))
        })?;
        let rec = match name {
            Some(n) => records.iter().find(|r| r.name == n),
            None => records.iter().find(|r| r.band().same_sweep(&raw.config.band)),
        }
        .ok_or_else(|| CliError::Domain(format!("no calibration record matches the sweep of scan {}", entry.scan_id)))?;
        let cal = apply_calibration(&raw, rec)?;
        let rel = calibrated_path(k);
        run.write_sweep(&rel, &[cal], &[])?;
        entry.calibrated = Some(rel);
        entry.calibration = Some(rec.name.clone());
        *used.entry(rec.name.as_str()).or_default() += 1;
    }
    store_calibrations(run, &mut manifest, &records)?;
    run.write_manifest(&manifest)?;
    Ok(json(&CalibrateSummary {
        calibrated: manifest.scans.len(),
        records: used,
    }))
}

#[derive(Serialize)]
struct ExtractSummary {
    scans: usize,
    samples: usize,
    path: &'static str,
}

pub fn extract(run: &RunDir, beams: usize, noise_gate: bool, mode: FrequencyMode) -> Result<String, CliError> {
    let _lock = run.lock()?;
    let manifest = run.read_manifest()?;
    let opts = ExtractOptions {
        noise_gate,
        max_beams: beams,
        frequency_mode: mode,
    };
    let mut samples = Vec::new();
    for entry in &manifest.scans {
        let scan = run.load_scan(entry)?;
        samples.extend(extract_samples(&scan, &opts).map_err(|e| CliError::Domain(format!("scan {}: {e}", entry.scan_id)))?);
    }
    run.write_samples(&samples)?;
    Ok(json(&ExtractSummary {
        scans: manifest.scans.len(),
        samples: samples.len(),
        path: SAMPLES_FILE,
    }))
}

/// The sounder band whose nominal frequency is `f_ghz` or whose sweep contains it.
pub fn band_of(f_ghz: f64) -> Option<NominalBand> {
    [(NominalBand::G140, 130.0, 143.0), (NominalBand::G220, 201.0, 209.0)]
        .into_iter()
        .find(|(b, lo, hi)| f_ghz == b.nominal_ghz() || (*lo..=*hi).contains(&f_ghz))
        .map(|(b, _, _)| b)
}

fn band_matches(filter: BandArg, f_ghz: f64) -> bool {
    match filter {
        BandArg::All => true,
        b => band_of(f_ghz).is_some_and(|nb| b.bands() == [nb]),
    }
}

#[derive(Debug, Serialize)]
pub struct BandFit {
    /// Frequency of a single-band fit; `None` for multi-band fits.
    pub frequency_ghz: Option<f64>,
    pub report: FitReport,
}

#[derive(Debug, Serialize)]
pub struct FitSummary {
    pub model: &'static str,
    pub kind: PathLossKind,
    pub band: &'static str,
    pub scenario: Option<Scenario>,
    pub fits: Vec<BandFit>,
}

fn model_name(m: ModelArg) -> &'static str {
    match m {
        ModelArg::Ci => "ci",
        ModelArg::Abg => "abg",
        ModelArg::Cif => "cif",
    }
}

/// Samples grouped by frequency, ascending.
fn by_frequency(samples: &[PathLossSample]) -> Vec<(f64, Vec<PathLossSample>)> {
    let mut groups: Vec<(f64, Vec<PathLossSample>)> = Vec::new();
    for s in samples {
        match groups.iter_mut().find(|(f, _)| *f == s.frequency_ghz) {
            Some((_, g)) => g.push(s.clone()),
            None => groups.push((s.frequency_ghz, vec![s.clone()])),
        }
    }
    groups.sort_by(|a, b| a.0.total_cmp(&b.0));
    groups
}

pub fn fit(
    run: &RunDir,
    model: ModelArg,
    kind: PathLossKind,
    band: BandArg,
    scenario: Option<Scenario>,
) -> Result<String, CliError> {
    let _lock = run.lock()?;
    let samples: Vec<PathLossSample> = run
        .read_samples()?
        .into_iter()
        .filter(|s| s.kind == kind && scenario.is_none_or(|sc| s.scenario == sc) && band_matches(band, s.frequency_ghz))
        .collect();
    if samples.is_empty() {
        return Err(CliError::Domain(format!(
            "no extracted samples for kind {kind}, band {}{}",
            band.name(),
            scenario.map(|s| format!(", scenario {s}")).unwrap_or_default()
        )));
    }
    let groups = by_frequency(&samples);
    let fits = match model {
        ModelArg::Ci => groups
            .iter()
            .map(|(f, g)| {
                Ok(BandFit {
                    frequency_ghz: Some(*f),
                    report: fit_ci(&Dataset::new(g.clone())?, *f)?,
                })
            })
            .collect::<Result<Vec<_>, CliError>>()?,
        ModelArg::Abg | ModelArg::Cif => {
            let data = Dataset::new(samples.clone())?;
            let report = if model == ModelArg::Abg { fit_abg(&data)? } else { fit_cif(&data)? };
            vec![BandFit {
                frequency_ghz: None,
                report,
            }]
        }
    };
    let summary = FitSummary {
        model: model_name(model),
        kind,
        band: band.name(),
        scenario,
        fits,
    };
    let stem = format!("{}_{}_{}", summary.model, kind.to_string().replace(':', "-"), band.name());
    let text = report_json(&summary);
    run.write_text(&format!("fits/{stem}.json"), &(text.clone() + "\n"))?;
    for (f, g) in &groups {
        let mut rows: Vec<(f64, f64)> = g.iter().map(|s| (s.distance_m, s.pl_db)).collect();
        rows.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.total_cmp(&b.1)));
        let mut csv = String::from("distance_m,pl_db\n");
        for (d, pl) in rows {
            csv.push_str(&format!("{d},{pl}\n"));
        }
        run.write_text(&format!("fits/{stem}_{f}GHz.csv"), &csv)?;
    }
    Ok(text)
}

pub struct PredictRequest {
    pub scenario: Scenario,
    pub model: ModelArg,
    pub kind: PathLossKind,
    pub band: BandArg,
    pub distance_m: f64,
    pub frequency_ghz: Option<f64>,
    pub seed: Option<u64>,
    pub mode: FrequencyMode,
}

#[derive(Serialize)]
struct Prediction {
    scenario: Scenario,
    model: &'static str,
    kind: PathLossKind,
    distance_m: f64,
    frequency_ghz: f64,
    seed: Option<u64>,
    pl_db: f64,
}

/// Mean path loss from a preset, or one shadow-fading draw when seeded.
pub fn predict_db(req: &PredictRequest) -> Result<(f64, f64), CliError> {
    let p = preset(req.scenario);
    let missing = || CliError::Domain(format!("no {} preset for kind {} in {}", model_name(req.model), req.kind, req.scenario));
    let (model, f) = match req.model {
        ModelArg::Ci => {
            let band = match req.band.bands().as_slice() {
                [b] => *b,
                _ => return Err(CliError::Usage("a CI preset needs --band 140 or --band 220".into())),
            };
            let m = p.ci_model(req.kind, band, req.mode).ok_or_else(missing)?;
            let f = m.frequency_ghz;
            (PathLossModel::Ci(m), f)
        }
        ModelArg::Abg | ModelArg::Cif => {
            let f = req
                .frequency_ghz
                .ok_or_else(|| CliError::Usage(format!("--freq is required for {}", model_name(req.model))))?;
            let m = if req.model == ModelArg::Abg {
                PathLossModel::Abg(p.abg_model(req.kind).ok_or_else(missing)?)
            } else {
                PathLossModel::Cif(p.cif_model(req.kind).ok_or_else(missing)?)
            };
            (m, f)
        }
    };
    let pl = match req.seed {
        Some(seed) => model.sample(req.distance_m, f, seed)?,
        None => model.predict(req.distance_m, f)?,
    };
    Ok((pl, f))
}

pub fn predict(req: &PredictRequest) -> Result<String, CliError> {
    let (pl_db, frequency_ghz) = predict_db(req)?;
    Ok(report_json(&Prediction {
        scenario: req.scenario,
        model: model_name(req.model),
        kind: req.kind,
        distance_m: req.distance_m,
        frequency_ghz,
        seed: req.seed,
        pl_db,
    }))
}

pub fn synth_options(args: &SynthArgs) -> SynthOptions {
    let distances_m = if args.distances.is_empty() {
        linspace(args.min_distance, args.max_distance, args.placements)
    } else {
        args.distances.clone()
    };
    SynthOptions {
        scenario: args.scenario,
        environment: args.env,
        bands: args.band.bands(),
        distances_m,
        n_azimuth: args.azimuths,
        n_elevation: args.elevations,
        n_points: args.points,
        system_response: args.system_response,
        noise: !args.no_noise,
        seed: args.seed,
    }
}

#[derive(Serialize)]
struct SynthSummary {
    output: String,
    scans: usize,
    calibrations: usize,
    seed: u64,
}

pub fn synth(args: &SynthArgs) -> Result<String, CliError> {
    let campaign = generate(&synth_options(args))?;
    if let Some(parent) = args.output.parent().filter(|p| !p.as_os_str().is_empty()) {
        std::fs::create_dir_all(parent).map_err(|e| CliError::io(parent, e))?;
    }
    crate::rundir::write_sweep_file(&args.output, &campaign.measured, &campaign.calibrations)?;
    Ok(json(&SynthSummary {
        output: args.output.display().to_string(),
        scans: campaign.measured.len(),
        calibrations: campaign.calibrations.len(),
        seed: args.seed,
    }))
}
