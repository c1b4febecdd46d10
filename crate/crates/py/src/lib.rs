//! Python bindings for the `thz-pathloss` crate.
//!
//! Exposes free-space loss, the CI / ABG / CIF models and their presets,
//! least-squares fitting, beam combination and the free-space scan
//! synthesizer as the `thzpl` extension module.

use pyo3::create_exception;
use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;
use pyo3::types::PyDict;

use thz_pathloss::fitting::{report_json, round_sig6};
use thz_pathloss::models::presets::{preset, presets_json as all_presets_json};
use thz_pathloss::synth::{derive_seed as mix_seed, free_space_environment, synthesize_scan, SynthError};
use thz_pathloss::{
    best_direction_pl, combine_coherent, combine_noncoherent, extract_samples, fit_abg, fit_ci,
    fit_cif, fspl_db as core_fspl, omni_pl, AbgModel, BeamEntry, BeamTable, CiModel, CifModel,
    Dataset, ExtractOptions, ExtractionError, FitError, FitReport, FrequencyMode, ModelError,
    NominalBand, PathLossKind, PathLossModel, PathLossSample, ScanContext, Scenario,
    SounderConfig,
};

create_exception!(thzpl, ThzplError, PyValueError, "Invalid input to a path-loss operation.");
create_exception!(thzpl, RankDeficientError, ThzplError, "Least-squares design matrix is rank deficient.");

fn model_err(e: ModelError) -> PyErr {
    ThzplError::new_err(e.to_string())
}

fn fit_err(e: FitError) -> PyErr {
    match e {
        FitError::RankDeficient { .. } | FitError::DegenerateGeometry | FitError::UnstableSlope(_) => {
            RankDeficientError::new_err(e.to_string())
        }
        other => ThzplError::new_err(other.to_string()),
    }
}

fn extraction_err(e: ExtractionError) -> PyErr {
    ThzplError::new_err(e.to_string())
}

fn synth_err(e: SynthError) -> PyErr {
    match e {
        SynthError::Fit(f) => fit_err(f),
        other => ThzplError::new_err(other.to_string()),
    }
}

fn parse_scenario(s: &str) -> PyResult<Scenario> {
    s.parse().map_err(|e: thz_pathloss::types::UnknownName| ThzplError::new_err(e.to_string()))
}

fn parse_kind(s: &str) -> PyResult<PathLossKind> {
    s.parse().map_err(|e: thz_pathloss::types::UnknownName| ThzplError::new_err(e.to_string()))
}

fn parse_band(s: &str) -> PyResult<NominalBand> {
    NominalBand::parse(s).ok_or_else(|| ThzplError::new_err(format!("unknown band '{s}'")))
}

fn parse_mode(s: &str) -> PyResult<FrequencyMode> {
    match s {
        "nominal" => Ok(FrequencyMode::Nominal),
        "center" => Ok(FrequencyMode::Center),
        _ => Err(ThzplError::new_err(format!("unknown frequency mode '{s}'"))),
    }
}

fn parse_scenario_opt(s: Option<&str>) -> PyResult<Option<Scenario>> {
    s.map(parse_scenario).transpose()
}

/// Free-space path loss in dB at `f_ghz` and `d_m`.
#[pyfunction]
fn fspl_db(f_ghz: f64, d_m: f64) -> PyResult<f64> {
    core_fspl(f_ghz, d_m).map_err(model_err)
}

/// SplitMix64 seed for placement `index` of a campaign seeded with `base`.
#[pyfunction]
fn derive_seed(base: u64, index: u64) -> u64 {
    mix_seed(base, index)
}

#[pyfunction]
fn presets_json() -> String {
    all_presets_json()
}

/// A CI, ABG or CIF path-loss model.
#[pyclass(frozen, name = "Model")]
#[derive(Clone)]
struct PyModel {
    inner: PathLossModel,
}

#[pymethods]
impl PyModel {
    #[staticmethod]
    #[pyo3(signature = (ple, frequency_ghz, sigma_sf_db=None, kind="best", scenario=None))]
    fn ci(ple: f64, frequency_ghz: f64, sigma_sf_db: Option<f64>, kind: &str, scenario: Option<&str>) -> PyResult<Self> {
        Ok(Self {
            inner: PathLossModel::Ci(CiModel {
                ple,
                sigma_sf_db,
                frequency_ghz,
                kind: parse_kind(kind)?,
                scenario: parse_scenario_opt(scenario)?,
            }),
        })
    }

    #[staticmethod]
    #[pyo3(signature = (alpha, beta_db, gamma, sigma_sf_db=None, kind="best", scenario=None))]
    fn abg(
        alpha: f64,
        beta_db: f64,
        gamma: f64,
        sigma_sf_db: Option<f64>,
        kind: &str,
        scenario: Option<&str>,
    ) -> PyResult<Self> {
        Ok(Self {
            inner: PathLossModel::Abg(AbgModel {
                alpha,
                beta_db,
                gamma,
                sigma_sf_db,
                r_squared: None,
                kind: parse_kind(kind)?,
                scenario: parse_scenario_opt(scenario)?,
            }),
        })
    }

    #[staticmethod]
    #[pyo3(signature = (n, b, f_avg_ghz, sigma_sf_db=None, kind="best", scenario=None))]
    fn cif(
        n: f64,
        b: f64,
        f_avg_ghz: f64,
        sigma_sf_db: Option<f64>,
        kind: &str,
        scenario: Option<&str>,
    ) -> PyResult<Self> {
        Ok(Self {
            inner: PathLossModel::Cif(CifModel {
                n,
                b,
                f_avg_ghz,
                sigma_sf_db,
                r_squared: None,
                kind: parse_kind(kind)?,
                scenario: parse_scenario_opt(scenario)?,
            }),
        })
    }

    /// Published model for a scenario. `band` selects the CI table column and
    /// is ignored by the multi-band models.
    #[staticmethod]
    #[pyo3(signature = (scenario, model="ci", kind="best", band="140", frequency_mode="nominal"))]
    fn preset(scenario: &str, model: &str, kind: &str, band: &str, frequency_mode: &str) -> PyResult<Self> {
        let p = preset(parse_scenario(scenario)?);
        let kind = parse_kind(kind)?;
        let inner = match model {
            "ci" => p
                .ci_model(kind, parse_band(band)?, parse_mode(frequency_mode)?)
                .map(PathLossModel::Ci),
            "abg" => p.abg_model(kind).map(PathLossModel::Abg),
            "cif" => p.cif_model(kind).map(PathLossModel::Cif),
            _ => return Err(ThzplError::new_err(format!("unknown model '{model}'"))),
        };
        inner
            .map(|inner| Self { inner })
            .ok_or_else(|| ThzplError::new_err(format!("no {model} preset for {kind} in {}", p.scenario)))
    }

    #[getter]
    fn name(&self) -> &'static str {
        match self.inner {
            PathLossModel::Ci(_) => "ci",
            PathLossModel::Abg(_) => "abg",
            PathLossModel::Cif(_) => "cif",
        }
    }

    #[getter]
    fn kind(&self) -> String {
        self.inner.kind().to_string()
    }

    #[getter]
    fn scenario(&self) -> Option<&'static str> {
        self.inner.scenario().map(Scenario::name)
    }

    #[getter]
    fn sigma_sf_db(&self) -> Option<f64> {
        self.inner.sigma_sf_db()
    }

    /// Model parameters by name.
    fn params<'py>(&self, py: Python<'py>) -> PyResult<Bound<'py, PyDict>> {
        let d = PyDict::new(py);
        match &self.inner {
            PathLossModel::Ci(m) => {
                d.set_item("ple", m.ple)?;
                d.set_item("frequency_ghz", m.frequency_ghz)?;
            }
            PathLossModel::Abg(m) => {
                d.set_item("alpha", m.alpha)?;
                d.set_item("beta_db", m.beta_db)?;
                d.set_item("gamma", m.gamma)?;
            }
            PathLossModel::Cif(m) => {
                d.set_item("n", m.n)?;
                d.set_item("b", m.b)?;
                d.set_item("f_avg_ghz", m.f_avg_ghz)?;
            }
        }
        Ok(d)
    }

    /// Mean path loss in dB. CI models use their own frequency.
    #[pyo3(signature = (d_m, f_ghz=None))]
    fn predict(&self, d_m: f64, f_ghz: Option<f64>) -> PyResult<f64> {
        let f = self.frequency(f_ghz)?;
        self.inner.predict(d_m, f).map_err(model_err)
    }

    /// Mean path loss plus one seeded shadow-fading draw.
    #[pyo3(signature = (d_m, seed, f_ghz=None))]
    fn sample(&self, d_m: f64, seed: u64, f_ghz: Option<f64>) -> PyResult<f64> {
        let f = self.frequency(f_ghz)?;
        self.inner.sample(d_m, f, seed).map_err(model_err)
    }

    fn to_json(&self) -> String {
        report_json(&self.inner)
    }

    fn __repr__(&self) -> String {
        format!("Model({})", self.to_json())
    }
}

impl PyModel {
    fn frequency(&self, f_ghz: Option<f64>) -> PyResult<f64> {
        match (&self.inner, f_ghz) {
            (PathLossModel::Ci(m), None) => Ok(m.frequency_ghz),
            (_, Some(f)) => Ok(f),
            _ => Err(ThzplError::new_err("multi-band models need f_ghz")),
        }
    }
}

/// Result of a least-squares fit.
#[pyclass(frozen, name = "FitResult")]
struct PyFitResult {
    report: FitReport,
}

#[pymethods]
impl PyFitResult {
    #[getter]
    fn model(&self) -> PyModel {
        PyModel {
            inner: self.report.model.clone(),
        }
    }

    #[getter]
    fn n_samples(&self) -> usize {
        self.report.n_samples
    }

    #[getter]
    fn sigma_sf_db(&self) -> f64 {
        self.report.sigma_sf_db
    }

    #[getter]
    fn r_squared(&self) -> Option<f64> {
        self.report.r_squared
    }

    #[getter]
    fn condition_number(&self) -> Option<f64> {
        self.report.condition_number
    }

    #[getter]
    fn residuals_db(&self) -> Vec<f64> {
        self.report.residuals_db.clone()
    }

    #[getter]
    fn dataset_sha256(&self) -> &str {
        &self.report.dataset_sha256
    }

    /// Report as JSON with values rounded to 6 significant digits.
    fn to_json(&self) -> String {
        report_json(&self.report)
    }

    fn __repr__(&self) -> String {
        format!(
            "FitResult(model={}, n_samples={}, sigma_sf_db={})",
            self.model().name(),
            self.report.n_samples,
            round_sig6(self.report.sigma_sf_db)
        )
    }
}

fn dataset(
    distance_m: &[f64],
    frequency_ghz: &[f64],
    pl_db: &[f64],
    kind: &str,
    scenario: &str,
) -> PyResult<Dataset> {
    if distance_m.len() != pl_db.len() || frequency_ghz.len() != pl_db.len() {
        return Err(ThzplError::new_err("distance_m, frequency_ghz and pl_db differ in length"));
    }
    let kind = parse_kind(kind)?;
    let scenario = parse_scenario(scenario)?;
    let samples = distance_m
        .iter()
        .zip(frequency_ghz)
        .zip(pl_db)
        .enumerate()
        .map(|(k, ((&d, &f), &pl))| PathLossSample {
            scan_id: format!("s{k}"),
            scenario,
            distance_m: d,
            frequency_ghz: f,
            pl_db: pl,
            kind,
        })
        .collect();
    Dataset::new(samples).map_err(fit_err)
}

/// Closed-form CI fit at a single frequency.
#[pyfunction]
#[pyo3(name = "fit_ci", signature = (distance_m, pl_db, frequency_ghz, kind="best", scenario="NLoS"))]
fn fit_ci_py(distance_m: Vec<f64>, pl_db: Vec<f64>, frequency_ghz: f64, kind: &str, scenario: &str) -> PyResult<PyFitResult> {
    let freqs = vec![frequency_ghz; pl_db.len()];
    let data = dataset(&distance_m, &freqs, &pl_db, kind, scenario)?;
    fit_ci(&data, frequency_ghz).map(|report| PyFitResult { report }).map_err(fit_err)
}

/// Least-squares ABG fit over samples at two or more frequencies.
#[pyfunction]
#[pyo3(name = "fit_abg", signature = (distance_m, frequency_ghz, pl_db, kind="best", scenario="NLoS"))]
fn fit_abg_py(distance_m: Vec<f64>, frequency_ghz: Vec<f64>, pl_db: Vec<f64>, kind: &str, scenario: &str) -> PyResult<PyFitResult> {
    let data = dataset(&distance_m, &frequency_ghz, &pl_db, kind, scenario)?;
    fit_abg(&data).map(|report| PyFitResult { report }).map_err(fit_err)
}

/// Least-squares CIF fit over samples at two or more frequencies.
#[pyfunction]
#[pyo3(name = "fit_cif", signature = (distance_m, frequency_ghz, pl_db, kind="best", scenario="NLoS"))]
fn fit_cif_py(distance_m: Vec<f64>, frequency_ghz: Vec<f64>, pl_db: Vec<f64>, kind: &str, scenario: &str) -> PyResult<PyFitResult> {
    let data = dataset(&distance_m, &frequency_ghz, &pl_db, kind, scenario)?;
    fit_cif(&data).map(|report| PyFitResult { report }).map_err(fit_err)
}

/// Path loss of `kind` ("best", "omni", "coherent:N", "noncoherent:N") from
/// per-direction averaged magnitudes |H|.
#[pyfunction]
fn beam_pl(magnitudes: Vec<f64>, kind: &str) -> PyResult<f64> {
    let context = ScanContext {
        scan_id: "beams".into(),
        scenario: Scenario::NLoS,
        distance_m: 1.0,
        frequency_ghz: 1.0,
    };
    let entries = magnitudes
        .iter()
        .enumerate()
        .map(|(k, &m)| BeamEntry {
            azimuth_deg: k as f64,
            elevation_deg: 0.0,
            avg_magnitude: m,
        })
        .collect();
    let table = BeamTable::new(context, entries).map_err(extraction_err)?;
    let sample = match parse_kind(kind)? {
        PathLossKind::BestDirection => best_direction_pl(&table),
        PathLossKind::Omni => omni_pl(&table),
        PathLossKind::Coherent(n) => combine_coherent(&table, n),
        PathLossKind::NonCoherent(n) => combine_noncoherent(&table, n),
    };
    sample.map(|s| s.pl_db).map_err(extraction_err)
}

/// Synthesizes one line-of-sight scan on the full sounder grid and returns
/// its extracted path loss keyed by kind.
#[pyfunction]
#[pyo3(signature = (distance_m, seed, band="140", scenario="Hallway", noise=true, max_beams=5))]
fn synth_free_space<'py>(
    py: Python<'py>,
    distance_m: f64,
    seed: u64,
    band: &str,
    scenario: &str,
    noise: bool,
    max_beams: usize,
) -> PyResult<Bound<'py, PyDict>> {
    let cfg = match parse_band(band)? {
        NominalBand::G140 => SounderConfig::sounder_140(),
        NominalBand::G220 => SounderConfig::sounder_220(),
    };
    let f_ghz = cfg.band.nominal_ghz();
    let mut env = free_space_environment("py", &cfg, parse_scenario(scenario)?, distance_m, f_ghz, seed);
    env.add_noise = noise;
    let scan = py.allow_threads(|| synthesize_scan(&env, &cfg)).map_err(synth_err)?;
    let options = ExtractOptions {
        max_beams,
        ..ExtractOptions::default()
    };
    let samples = extract_samples(&scan, &options).map_err(extraction_err)?;
    let d = PyDict::new(py);
    for s in samples {
        d.set_item(s.kind.to_string(), s.pl_db)?;
    }
    Ok(d)
}

#[pymodule]
pub fn thzpl(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add("ThzplError", m.py().get_type::<ThzplError>())?;
    m.add("RankDeficientError", m.py().get_type::<RankDeficientError>())?;
    m.add_class::<PyModel>()?;
    m.add_class::<PyFitResult>()?;
    m.add_function(wrap_pyfunction!(fspl_db, m)?)?;
    m.add_function(wrap_pyfunction!(derive_seed, m)?)?;
    m.add_function(wrap_pyfunction!(presets_json, m)?)?;
    m.add_function(wrap_pyfunction!(fit_ci_py, m)?)?;
    m.add_function(wrap_pyfunction!(fit_abg_py, m)?)?;
    m.add_function(wrap_pyfunction!(fit_cif_py, m)?)?;
    m.add_function(wrap_pyfunction!(beam_pl, m)?)?;
    m.add_function(wrap_pyfunction!(synth_free_space, m)?)?;
    Ok(())
}
