//! Minimum mean-square-error fitting of CI, ABG and CIF models.
//!
//! σ_SF is the population RMS of the residuals (divide by N), which is the
//! quantity the least-squares fit minimises. R² is centred on the observed
//! path loss. Samples are weighted uniformly.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};
use serde_json::Value;
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::models::{
    fspl_db, weighted_avg_frequency, AbgModel, CiModel, CifModel, ModelError, PathLossModel,
};
use crate::types::{PathLossKind, PathLossSample, Scenario, REFERENCE_DISTANCE_M, REFERENCE_FREQUENCY_GHZ};

/// Normal-matrix condition number above which a design is rank deficient.
pub const MAX_CONDITION_NUMBER: f64 = 1e10;

/// |n| below which the CIF slope b = v/n is not identifiable.
pub const MIN_CIF_EXPONENT: f64 = 1e-6;

const FREQUENCY_MATCH_REL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum FitError {
    #[error("dataset is empty")]
    EmptyDataset,
    #[error(transparent)]
    Domain(#[from] ModelError),
    #[error("non-finite path loss {0} dB in dataset")]
    NonFinite(f64),
    #[error("sample at {found} GHz in a single-frequency fit at {expected} GHz")]
    MixedFrequency { expected: f64, found: f64 },
    #[error("dataset mixes path-loss kinds {0} and {1}")]
    MixedKind(PathLossKind, PathLossKind),
    #[error("every distance equals the reference distance; the exponent is unidentifiable")]
    DegenerateGeometry,
    #[error("design matrix is rank deficient ({reason}); normal-matrix condition number {condition_number:e}")]
    RankDeficient { reason: String, condition_number: f64 },
    #[error("fitted CIF exponent {0} too close to zero to resolve b")]
    UnstableSlope(f64),
    #[error("path loss has zero variance; R² undefined")]
    ZeroVariance,
}

/// Non-empty set of path-loss samples, all at or beyond d0.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dataset {
    samples: Vec<PathLossSample>,
}

impl Dataset {
    pub fn new(samples: Vec<PathLossSample>) -> Result<Self, FitError> {
        if samples.is_empty() {
            return Err(FitError::EmptyDataset);
        }
        for s in &samples {
            if !(s.distance_m.is_finite() && s.distance_m >= REFERENCE_DISTANCE_M) {
                return Err(ModelError::DomainError {
                    what: "distance_m",
                    value: s.distance_m,
                }
                .into());
            }
            if !(s.frequency_ghz.is_finite() && s.frequency_ghz > 0.0) {
                return Err(ModelError::DomainError {
                    what: "frequency_ghz",
                    value: s.frequency_ghz,
                }
                .into());
            }
            if !s.pl_db.is_finite() {
                return Err(FitError::NonFinite(s.pl_db));
            }
        }
        Ok(Self { samples })
    }

    pub fn samples(&self) -> &[PathLossSample] {
        &self.samples
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    /// Distinct frequencies with their sample counts, ascending.
    pub fn frequency_counts(&self) -> Vec<(f64, usize)> {
        let mut freqs: Vec<f64> = self.samples.iter().map(|s| s.frequency_ghz).collect();
        freqs.sort_by(f64::total_cmp);
        let mut out: Vec<(f64, usize)> = Vec::new();
        for f in freqs {
            match out.last_mut() {
                Some((g, n)) if *g == f => *n += 1,
                _ => out.push((f, 1)),
            }
        }
        out
    }

    /// Keeps samples matching `pred`; errors if nothing is left.
    pub fn filtered(&self, pred: impl Fn(&PathLossSample) -> bool) -> Result<Dataset, FitError> {
        Dataset::new(self.samples.iter().filter(|s| pred(s)).cloned().collect())
    }

    /// SHA-256 over the sorted canonical sample lines; independent of order.
    pub fn content_hash(&self) -> String {
        let mut lines: Vec<String> = self
            .samples
            .iter()
            .map(|s| {
                format!(
                    "{}|{}|{}|{}|{}|{}",
                    s.scan_id, s.scenario, s.distance_m, s.frequency_ghz, s.pl_db, s.kind
                )
            })
            .collect();
        lines.sort();
        let mut hasher = Sha256::new();
        for line in &lines {
            hasher.update(line.as_bytes());
            hasher.update(b"\n");
        }
        hex::encode(hasher.finalize())
    }

    fn common_kind(&self) -> Result<PathLossKind, FitError> {
        let first = self.samples[0].kind;
        match self.samples.iter().find(|s| s.kind != first) {
            Some(other) => Err(FitError::MixedKind(first, other.kind)),
            None => Ok(first),
        }
    }

    fn common_scenario(&self) -> Option<Scenario> {
        let first = self.samples[0].scenario;
        self.samples.iter().all(|s| s.scenario == first).then_some(first)
    }
}

/// Fitted parameters with the residual statistics of the fit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitReport {
    pub model: PathLossModel,
    pub n_samples: usize,
    pub sigma_sf_db: f64,
    /// Clamped to [0, 1]; `None` when the data has no variance.
    pub r_squared: Option<f64>,
    pub r_squared_raw: Option<f64>,
    /// Condition number of XᵀX for the multi-band fits.
    pub condition_number: Option<f64>,
    pub dataset_sha256: String,
    pub observed_db: Vec<f64>,
    /// observed − predicted, in dataset order.
    pub residuals_db: Vec<f64>,
}

fn rms(values: &[f64]) -> f64 {
    (values.iter().map(|r| r * r).sum::<f64>() / values.len() as f64).sqrt()
}

/// Centred coefficient of determination `1 − SS_res / SS_tot`.
pub fn r_squared(observed: &[f64], residuals: &[f64]) -> Result<f64, FitError> {
    if observed.len() < 2 || observed.len() != residuals.len() {
        return Err(FitError::ZeroVariance);
    }
    let mean = observed.iter().sum::<f64>() / observed.len() as f64;
    let ss_tot: f64 = observed.iter().map(|y| (y - mean).powi(2)).sum();
    let scale: f64 = observed.iter().map(|y| y * y).sum();
    if ss_tot <= f64::EPSILON * f64::EPSILON * scale || ss_tot == 0.0 {
        return Err(FitError::ZeroVariance);
    }
    let ss_res: f64 = residuals.iter().map(|r| r * r).sum();
    Ok(1.0 - ss_res / ss_tot)
}

/// Raw R² of a report's residuals against its observations.
pub fn goodness_of_fit(report: &FitReport) -> Result<f64, FitError> {
    r_squared(&report.observed_db, &report.residuals_db)
}

fn build_report(
    model: PathLossModel,
    data: &Dataset,
    predicted: Vec<f64>,
    condition_number: Option<f64>,
) -> FitReport {
    let observed: Vec<f64> = data.samples.iter().map(|s| s.pl_db).collect();
    let residuals: Vec<f64> = observed.iter().zip(&predicted).map(|(o, p)| o - p).collect();
    let raw = r_squared(&observed, &residuals).ok();
    let sigma = rms(&residuals);
    let mut model = model;
    match &mut model {
        PathLossModel::Ci(m) => m.sigma_sf_db = Some(sigma),
        PathLossModel::Abg(m) => {
            m.sigma_sf_db = Some(sigma);
            m.r_squared = raw.map(|r| r.clamp(0.0, 1.0));
        }
        PathLossModel::Cif(m) => {
            m.sigma_sf_db = Some(sigma);
            m.r_squared = raw.map(|r| r.clamp(0.0, 1.0));
        }
    }
    FitReport {
        model,
        n_samples: observed.len(),
        sigma_sf_db: sigma,
        r_squared: raw.map(|r| r.clamp(0.0, 1.0)),
        r_squared_raw: raw,
        condition_number,
        dataset_sha256: data.content_hash(),
        observed_db: observed,
        residuals_db: residuals,
    }
}

fn log_distance(d_m: f64) -> f64 {
    10.0 * (d_m / REFERENCE_DISTANCE_M).log10()
}

/// Closed-form CI exponent `PLE = Σ x·y / Σ x²` with
/// `x = 10·log10(d/d0)` and `y = PL − FSPL(f, d0)`.
pub fn fit_ci(data: &Dataset, f_ghz: f64) -> Result<FitReport, FitError> {
    if let Some(s) = data
        .samples
        .iter()
        .find(|s| (s.frequency_ghz - f_ghz).abs() > FREQUENCY_MATCH_REL * f_ghz.abs())
    {
        return Err(FitError::MixedFrequency {
            expected: f_ghz,
            found: s.frequency_ghz,
        });
    }
    let kind = data.common_kind()?;
    let anchor = fspl_db(f_ghz, REFERENCE_DISTANCE_M)?;
    let (mut sxy, mut sxx) = (0.0, 0.0);
    for s in &data.samples {
        let x = log_distance(s.distance_m);
        sxy += x * (s.pl_db - anchor);
        sxx += x * x;
    }
    if sxx == 0.0 {
        return Err(FitError::DegenerateGeometry);
    }
    let ple = sxy / sxx;
    let predicted = data
        .samples
        .iter()
        .map(|s| anchor + ple * log_distance(s.distance_m))
        .collect();
    let model = CiModel {
        ple,
        sigma_sf_db: None,
        frequency_ghz: f_ghz,
        kind,
        scenario: data.common_scenario(),
    };
    Ok(build_report(PathLossModel::Ci(model), data, predicted, None))
}

/// Least squares via SVD of the design matrix. Returns the solution and
/// the condition number of the normal matrix XᵀX.
pub fn least_squares(design: &DMatrix<f64>, target: &DVector<f64>) -> Result<(DVector<f64>, f64), FitError> {
    let svd = design.clone().svd(true, true);
    let s_max = svd.singular_values.max();
    let s_min = svd.singular_values.min();
    let condition = if s_min > 0.0 { (s_max / s_min).powi(2) } else { f64::INFINITY };
    if condition.is_nan() || condition > MAX_CONDITION_NUMBER {
        return Err(FitError::RankDeficient {
            reason: "collinear regressors".into(),
            condition_number: condition,
        });
    }
    let solution = svd
        .solve(target, 0.0)
        .map_err(|e| FitError::RankDeficient {
            reason: e.to_string(),
            condition_number: condition,
        })?;
    Ok((solution, condition))
}

fn require_multiband(data: &Dataset, min_samples: usize) -> Result<(), FitError> {
    let usable = data.frequency_counts().iter().filter(|(_, n)| *n >= 2).count();
    if usable < 2 {
        return Err(FitError::RankDeficient {
            reason: "multi-band fit needs at least two frequencies with two samples each".into(),
            condition_number: f64::INFINITY,
        });
    }
    if data.len() < min_samples {
        return Err(FitError::RankDeficient {
            reason: format!("needs at least {min_samples} samples, got {}", data.len()),
            condition_number: f64::INFINITY,
        });
    }
    Ok(())
}

/// Ordinary least squares of PL on `[10·log10(d/d0), 1, 10·log10(f/f0)]`.
pub fn fit_abg(data: &Dataset) -> Result<FitReport, FitError> {
    let kind = data.common_kind()?;
    require_multiband(data, 3)?;
    let n = data.len();
    let design = DMatrix::from_fn(n, 3, |r, c| {
        let s = &data.samples[r];
        match c {
            0 => log_distance(s.distance_m),
            1 => 1.0,
            _ => 10.0 * (s.frequency_ghz / REFERENCE_FREQUENCY_GHZ).log10(),
        }
    });
    let target = DVector::from_iterator(n, data.samples.iter().map(|s| s.pl_db));
    let (theta, condition) = least_squares(&design, &target)?;
    let predicted = (&design * &theta).iter().copied().collect();
    let model = AbgModel {
        alpha: theta[0],
        beta_db: theta[1],
        gamma: theta[2],
        sigma_sf_db: None,
        r_squared: None,
        kind,
        scenario: data.common_scenario(),
    };
    Ok(build_report(PathLossModel::Abg(model), data, predicted, Some(condition)))
}

/// Least squares of `PL − FSPL(f, d0)` on `[x, x·(f − f_avg)/f_avg]` with
/// `x = 10·log10(d/d0)`, giving `n` and `n·b`. `f_avg` is the
/// sample-count-weighted mean frequency of the dataset.
pub fn fit_cif(data: &Dataset) -> Result<FitReport, FitError> {
    let kind = data.common_kind()?;
    require_multiband(data, 2)?;
    let f_avg = weighted_avg_frequency(&data.frequency_counts())?;
    let n = data.len();
    let design = DMatrix::from_fn(n, 2, |r, c| {
        let s = &data.samples[r];
        let x = log_distance(s.distance_m);
        match c {
            0 => x,
            _ => x * (s.frequency_ghz - f_avg) / f_avg,
        }
    });
    let anchors = data
        .samples
        .iter()
        .map(|s| fspl_db(s.frequency_ghz, REFERENCE_DISTANCE_M))
        .collect::<Result<Vec<_>, _>>()?;
    let target = DVector::from_iterator(
        n,
        data.samples.iter().zip(&anchors).map(|(s, a)| s.pl_db - a),
    );
    let (theta, condition) = least_squares(&design, &target)?;
    let (u, v) = (theta[0], theta[1]);
    if u.abs() < MIN_CIF_EXPONENT {
        return Err(FitError::UnstableSlope(u));
    }
    let fitted = &design * &theta;
    let predicted = fitted.iter().zip(&anchors).map(|(p, a)| p + a).collect();
    let model = CifModel {
        n: u,
        b: v / u,
        f_avg_ghz: f_avg,
        sigma_sf_db: None,
        r_squared: None,
        kind,
        scenario: data.common_scenario(),
    };
    Ok(build_report(PathLossModel::Cif(model), data, predicted, Some(condition)))
}

/// Rounds `x` to six significant digits.
pub fn round_sig6(x: f64) -> f64 {
    if !x.is_finite() || x == 0.0 {
        return x;
    }
    format!("{x:.5e}").parse().unwrap_or(x)
}

fn round_value(v: &mut Value) {
    match v {
        Value::Number(n) if !(n.is_i64() || n.is_u64()) => {
            if let Some(x) = n.as_f64() {
                if let Some(r) = serde_json::Number::from_f64(round_sig6(x)) {
                    *n = r;
                }
            }
        }
        Value::Array(items) => items.iter_mut().for_each(round_value),
        Value::Object(map) => map.values_mut().for_each(round_value),
        _ => {}
    }
}

/// Pretty JSON with every float rounded to six significant digits and
/// struct field order preserved.
pub fn report_json<T: Serialize>(report: &T) -> String {
    let mut value = serde_json::to_value(report).expect("report serializes");
    round_value(&mut value);
    serde_json::to_string_pretty(&value).expect("value serializes")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::{abg_predict, cif_predict};
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, Normal};

    fn sample(d: f64, f: f64, pl: f64) -> PathLossSample {
        PathLossSample {
            scan_id: format!("d{d}-f{f}"),
            scenario: Scenario::MeetingRoom,
            distance_m: d,
            frequency_ghz: f,
            pl_db: pl,
            kind: PathLossKind::BestDirection,
        }
    }

    fn ci_series(ple: f64, f: f64, distances: &[f64]) -> Vec<PathLossSample> {
        let anchor = fspl_db(f, 1.0).unwrap();
        distances
            .iter()
            .map(|&d| sample(d, f, anchor + 10.0 * ple * d.log10()))
            .collect()
    }

    fn grid_search_ple(data: &Dataset, f: f64) -> f64 {
        // independent oracle: exhaustive scan minimising σ_SF
        let anchor = fspl_db(f, 1.0).unwrap();
        let mut best = (f64::INFINITY, 0.0);
        for k in 0..=60_000 {
            let ple = k as f64 * 1e-4;
            let sse: f64 = data
                .samples()
                .iter()
                .map(|s| (s.pl_db - anchor - 10.0 * ple * s.distance_m.log10()).powi(2))
                .sum();
            if sse < best.0 {
                best = (sse, ple);
            }
        }
        best.1
    }

    const DISTANCES: [f64; 6] = [1.5, 2.0, 3.2, 5.0, 7.7, 12.0];

    #[test]
    fn noiseless_ci_recovery() {
        let data = Dataset::new(ci_series(2.0, 140.0, &DISTANCES)).unwrap();
        let r = fit_ci(&data, 140.0).unwrap();
        let PathLossModel::Ci(m) = &r.model else { panic!() };
        assert!((m.ple - 2.0).abs() < 1e-9);
        assert!(r.sigma_sf_db < 1e-9);
        assert!((r.r_squared.unwrap() - 1.0).abs() < 1e-9);
    }

    #[test]
    fn two_series_give_midpoint() {
        let mut samples = ci_series(1.5, 140.0, &[2.0, 5.0, 10.0]);
        samples.extend(ci_series(2.5, 140.0, &[2.0, 5.0, 10.0]));
        let r = fit_ci(&Dataset::new(samples).unwrap(), 140.0).unwrap();
        let PathLossModel::Ci(m) = r.model else { panic!() };
        assert!((m.ple - 2.0).abs() < 1e-12);
    }

    #[test]
    fn noisy_ci_recovery_seeded() {
        // seed 20_240_140, 1000 samples, uniform distances 1..20 m
        let mut rng = ChaCha8Rng::seed_from_u64(20_240_140);
        let noise = Normal::new(0.0, 2.8).unwrap();
        let anchor = fspl_db(140.0, 1.0).unwrap();
        let samples = (0..1000)
            .map(|k| {
                let d = 1.0 + 19.0 * (k as f64 + 0.5) / 1000.0;
                sample(d, 140.0, anchor + 19.4 * d.log10() + noise.sample(&mut rng))
            })
            .collect();
        let r = fit_ci(&Dataset::new(samples).unwrap(), 140.0).unwrap();
        let PathLossModel::Ci(m) = &r.model else { panic!() };
        assert!((m.ple - 1.94).abs() < 0.1, "ple {}", m.ple);
        assert!((r.sigma_sf_db - 2.8).abs() < 0.3, "sigma {}", r.sigma_sf_db);
    }

    #[test]
    fn ci_errors() {
        let data = Dataset::new(vec![sample(1.0, 140.0, 75.0), sample(1.0, 140.0, 76.0)]).unwrap();
        assert!(matches!(fit_ci(&data, 140.0), Err(FitError::DegenerateGeometry)));
        let mixed = Dataset::new(vec![sample(2.0, 140.0, 80.0), sample(3.0, 220.0, 90.0)]).unwrap();
        assert!(matches!(fit_ci(&mixed, 140.0), Err(FitError::MixedFrequency { .. })));
        assert_eq!(Dataset::new(vec![]), Err(FitError::EmptyDataset));
        assert!(matches!(
            Dataset::new(vec![sample(0.5, 140.0, 70.0)]),
            Err(FitError::Domain(_))
        ));
        let mut kinds = ci_series(2.0, 140.0, &[2.0, 3.0]);
        kinds[1].kind = PathLossKind::Omni;
        assert!(matches!(
            fit_ci(&Dataset::new(kinds).unwrap(), 140.0),
            Err(FitError::MixedKind(..))
        ));
    }

    fn abg_data(alpha: f64, beta: f64, gamma: f64) -> Vec<PathLossSample> {
        let m = AbgModel {
            alpha,
            beta_db: beta,
            gamma,
            sigma_sf_db: None,
            r_squared: None,
            kind: PathLossKind::BestDirection,
            scenario: None,
        };
        let mut out = Vec::new();
        for f in [140.0, 220.0] {
            for d in DISTANCES {
                out.push(sample(d, f, abg_predict(&m, d, f).unwrap()));
            }
        }
        out
    }

    #[test]
    fn noiseless_abg_recovery() {
        let r = fit_abg(&Dataset::new(abg_data(2.21, 21.65, 2.41)).unwrap()).unwrap();
        let PathLossModel::Abg(m) = &r.model else { panic!() };
        assert!((m.alpha - 2.21).abs() < 1e-9);
        assert!((m.beta_db - 21.65).abs() < 1e-9);
        assert!((m.gamma - 2.41).abs() < 1e-9);
        assert!(r.sigma_sf_db < 1e-9);
        assert!((r.r_squared_raw.unwrap() - 1.0).abs() < 1e-9);
        assert!(r.condition_number.unwrap() < MAX_CONDITION_NUMBER);
    }

    #[test]
    fn abg_single_frequency_is_rank_deficient() {
        let data = Dataset::new(ci_series(2.0, 140.0, &DISTANCES)).unwrap();
        assert!(matches!(fit_abg(&data), Err(FitError::RankDeficient { .. })));
        // two frequencies but one of them has a single sample
        let mut samples = ci_series(2.0, 140.0, &DISTANCES);
        samples.push(sample(3.0, 220.0, 90.0));
        assert!(matches!(
            fit_abg(&Dataset::new(samples).unwrap()),
            Err(FitError::RankDeficient { .. })
        ));
    }

    #[test]
    fn collinear_design_detected_by_svd() {
        // same frequency ratio in every row: column 3 ∝ column 2
        let x = DMatrix::from_row_slice(3, 2, &[1.0, 2.0, 2.0, 4.0, 3.0, 6.0]);
        let y = DVector::from_vec(vec![1.0, 2.0, 3.0]);
        assert!(matches!(least_squares(&x, &y), Err(FitError::RankDeficient { .. })));
    }

    #[test]
    fn abg_reproduces_two_band_ci_data() {
        let mut samples = ci_series(2.0, 140.0, &DISTANCES);
        samples.extend(ci_series(2.0, 220.0, &DISTANCES));
        let data = Dataset::new(samples).unwrap();
        let r = fit_abg(&data).unwrap();
        assert!(r.residuals_db.iter().all(|e| e.abs() < 1e-6));
    }

    fn cif_data(n: f64, b: f64, counts: (usize, usize)) -> Vec<PathLossSample> {
        let all_d = [1.2, 2.0, 2.9, 4.1, 6.0, 9.5, 14.0, 18.0];
        let f_avg = weighted_avg_frequency(&[(140.0, counts.0), (220.0, counts.1)]).unwrap();
        let m = CifModel {
            n,
            b,
            f_avg_ghz: f_avg,
            sigma_sf_db: None,
            r_squared: None,
            kind: PathLossKind::BestDirection,
            scenario: None,
        };
        let mut out = Vec::new();
        for (f, c) in [(140.0, counts.0), (220.0, counts.1)] {
            for d in all_d.iter().cycle().take(c) {
                out.push(sample(*d, f, cif_predict(&m, *d, f).unwrap()));
            }
        }
        out
    }

    #[test]
    fn noiseless_cif_recovery() {
        let r = fit_cif(&Dataset::new(cif_data(2.13, 0.044, (7, 5))).unwrap()).unwrap();
        let PathLossModel::Cif(m) = &r.model else { panic!() };
        assert!((m.n - 2.13).abs() < 1e-9);
        assert!((m.b - 0.044).abs() < 1e-9);
        assert!(r.sigma_sf_db < 1e-9);
    }

    #[test]
    fn cif_zero_slope_and_equal_counts() {
        let r = fit_cif(&Dataset::new(cif_data(1.9, 0.0, (6, 6))).unwrap()).unwrap();
        let PathLossModel::Cif(m) = &r.model else { panic!() };
        assert!(m.b.abs() < 1e-9);
        assert_eq!(m.f_avg_ghz, 180.0);
    }

    #[test]
    fn cif_unstable_slope() {
        // PL exactly FSPL(f, d0) at every distance: n = 0
        let mut samples = Vec::new();
        for f in [140.0, 220.0] {
            for d in [2.0, 4.0, 8.0] {
                samples.push(sample(d, f, fspl_db(f, 1.0).unwrap()));
            }
        }
        assert!(matches!(
            fit_cif(&Dataset::new(samples).unwrap()),
            Err(FitError::UnstableSlope(_))
        ));
    }

    #[test]
    fn goodness_of_fit_cases() {
        let data = Dataset::new(ci_series(2.0, 140.0, &DISTANCES)).unwrap();
        let mut r = fit_ci(&data, 140.0).unwrap();
        assert!((goodness_of_fit(&r).unwrap() - 1.0).abs() < 1e-12);
        let mean = r.observed_db.iter().sum::<f64>() / r.observed_db.len() as f64;
        r.residuals_db = r.observed_db.iter().map(|y| y - mean).collect();
        assert!(goodness_of_fit(&r).unwrap().abs() < 1e-12);
        r.observed_db = vec![80.0; r.observed_db.len()];
        assert_eq!(goodness_of_fit(&r), Err(FitError::ZeroVariance));
    }

    #[test]
    fn r_squared_is_clamped_but_raw_kept() {
        // CI through the d0 anchor on data far off it: worse than the mean
        let samples = vec![sample(2.0, 140.0, 30.0), sample(4.0, 140.0, 31.0), sample(8.0, 140.0, 30.5)];
        let r = fit_ci(&Dataset::new(samples).unwrap(), 140.0).unwrap();
        assert!(r.r_squared_raw.unwrap() < 0.0);
        assert_eq!(r.r_squared, Some(0.0));
    }

    #[test]
    fn duplication_and_hash_invariance() {
        let base = ci_series(1.7, 220.0, &DISTANCES);
        let a = fit_ci(&Dataset::new(base.clone()).unwrap(), 220.0).unwrap();
        let mut doubled = base.clone();
        doubled.extend(base.iter().cloned());
        let b = fit_ci(&Dataset::new(doubled).unwrap(), 220.0).unwrap();
        let (PathLossModel::Ci(ma), PathLossModel::Ci(mb)) = (&a.model, &b.model) else { panic!() };
        assert!((ma.ple - mb.ple).abs() < 1e-12);
        let mut reversed = base;
        reversed.reverse();
        let c = Dataset::new(reversed).unwrap();
        assert_eq!(c.content_hash(), a.dataset_sha256);
    }

    #[test]
    fn six_significant_digits() {
        assert_eq!(round_sig6(75.370123456), 75.3701);
        assert_eq!(round_sig6(2.0), 2.0);
        assert_eq!(round_sig6(1.234567e-7), 1.23457e-7);
        let json = report_json(&serde_json::json!({"a": 1.0000004, "n": 3}));
        assert!(json.contains("\"a\": 1.0"));
        assert!(json.contains("\"n\": 3"));
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]

        #[test]
        fn closed_form_matches_grid_search(
            ple in 0.5f64..5.0,
            noise in proptest::collection::vec(-3.0f64..3.0, 8),
            dists in proptest::collection::vec(1.0f64..30.0, 8),
        ) {
            let anchor = fspl_db(140.0, 1.0).unwrap();
            let samples: Vec<_> = dists.iter().zip(&noise)
                .map(|(&d, &e)| sample(d, 140.0, anchor + 10.0 * ple * d.log10() + e))
                .collect();
            let data = Dataset::new(samples).unwrap();
            prop_assume!(data.samples().iter().any(|s| s.distance_m > 1.05));
            let r = fit_ci(&data, 140.0).unwrap();
            let PathLossModel::Ci(m) = &r.model else { unreachable!() };
            prop_assume!((0.0..=6.0).contains(&m.ple));
            prop_assert!((m.ple - grid_search_ple(&data, 140.0)).abs() < 1e-3);
        }

        #[test]
        fn sigma_invariant_under_reordering(
            pls in proptest::collection::vec(60.0f64..110.0, 3..20),
            rot in 0usize..20,
        ) {
            let samples: Vec<_> = pls.iter().enumerate()
                .map(|(k, &pl)| sample(1.5 + k as f64, 140.0, pl)).collect();
            let mut rotated = samples.clone();
            let len = rotated.len();
            rotated.rotate_left(rot % len);
            let a = fit_ci(&Dataset::new(samples).unwrap(), 140.0).unwrap();
            let b = fit_ci(&Dataset::new(rotated).unwrap(), 140.0).unwrap();
            prop_assert!((a.sigma_sf_db - b.sigma_sf_db).abs() < 1e-9);
        }

        #[test]
        fn refit_on_own_predictions_is_fixed_point(
            alpha in 0.1f64..4.0, beta in -10.0f64..60.0, gamma in 0.5f64..4.0,
        ) {
            let r = fit_abg(&Dataset::new(abg_data(alpha, beta, gamma)).unwrap()).unwrap();
            let PathLossModel::Abg(m) = &r.model else { unreachable!() };
            let again = abg_data(m.alpha, m.beta_db, m.gamma);
            let r2 = fit_abg(&Dataset::new(again).unwrap()).unwrap();
            let PathLossModel::Abg(m2) = &r2.model else { unreachable!() };
            prop_assert!((m.alpha - m2.alpha).abs() < 1e-9);
            prop_assert!((m.beta_db - m2.beta_db).abs() < 1e-9);
            prop_assert!((m.gamma - m2.gamma).abs() < 1e-9);
            prop_assert!((r2.r_squared_raw.unwrap() - 1.0).abs() < 1e-9);
        }
    }
}
