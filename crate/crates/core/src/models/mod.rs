//! Forward path-loss models.
//!
//! All predictions are mean path loss in dB (shadow-fading term zero);
//! [`PathLossModel::sample`] adds one seeded draw of `X_σ ~ N(0, σ_SF²)`.
//! Distances below d0 = 1 m are rejected, not extrapolated.

pub mod presets;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::types::{
    PathLossKind, Scenario, REFERENCE_DISTANCE_M, REFERENCE_FREQUENCY_GHZ, SPEED_OF_LIGHT,
};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ModelError {
    #[error("{what} = {value} is outside the model domain")]
    DomainError { what: &'static str, value: f64 },
    #[error("weighted average needs a positive total sample count")]
    EmptyDataset,
    #[error("model has no published shadow-fading sigma")]
    NoShadowFading,
}

fn domain(what: &'static str, value: f64) -> ModelError {
    ModelError::DomainError { what, value }
}

fn require_distance(d_m: f64) -> Result<(), ModelError> {
    if d_m.is_finite() && d_m >= REFERENCE_DISTANCE_M {
        Ok(())
    } else {
        Err(domain("distance_m", d_m))
    }
}

fn require_frequency(f_ghz: f64) -> Result<(), ModelError> {
    if f_ghz.is_finite() && f_ghz > 0.0 {
        Ok(())
    } else {
        Err(domain("frequency_ghz", f_ghz))
    }
}

/// Friis free-space loss `20·log10(4π·f·d/c)` in dB.
pub fn fspl_db(f_ghz: f64, d_m: f64) -> Result<f64, ModelError> {
    require_frequency(f_ghz)?;
    if !(d_m.is_finite() && d_m > 0.0) {
        return Err(domain("distance_m", d_m));
    }
    Ok(20.0 * (4.0 * std::f64::consts::PI * f_ghz * 1e9 * d_m / SPEED_OF_LIGHT).log10())
}

/// Close-in model: `10·PLE·log10(d/d0) + FSPL(f, d0)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CiModel {
    pub ple: f64,
    pub sigma_sf_db: Option<f64>,
    pub frequency_ghz: f64,
    pub kind: PathLossKind,
    pub scenario: Option<Scenario>,
}

/// Alpha-beta-gamma model: `10α·log10(d/d0) + β + 10γ·log10(f/f0)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AbgModel {
    pub alpha: f64,
    pub beta_db: f64,
    pub gamma: f64,
    pub sigma_sf_db: Option<f64>,
    pub r_squared: Option<f64>,
    pub kind: PathLossKind,
    pub scenario: Option<Scenario>,
}

/// CI with frequency-weighted exponent:
/// `10·n·(1 + b·(f − f_avg)/f_avg)·log10(d/d0) + FSPL(f, d0)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CifModel {
    pub n: f64,
    pub b: f64,
    pub f_avg_ghz: f64,
    pub sigma_sf_db: Option<f64>,
    pub r_squared: Option<f64>,
    pub kind: PathLossKind,
    pub scenario: Option<Scenario>,
}

pub fn ci_predict(m: &CiModel, d_m: f64) -> Result<f64, ModelError> {
    require_distance(d_m)?;
    let anchor = fspl_db(m.frequency_ghz, REFERENCE_DISTANCE_M)?;
    Ok(10.0 * m.ple * (d_m / REFERENCE_DISTANCE_M).log10() + anchor)
}

pub fn abg_predict(m: &AbgModel, d_m: f64, f_ghz: f64) -> Result<f64, ModelError> {
    require_distance(d_m)?;
    require_frequency(f_ghz)?;
    Ok(10.0 * m.alpha * (d_m / REFERENCE_DISTANCE_M).log10()
        + m.beta_db
        + 10.0 * m.gamma * (f_ghz / REFERENCE_FREQUENCY_GHZ).log10())
}

pub fn cif_predict(m: &CifModel, d_m: f64, f_ghz: f64) -> Result<f64, ModelError> {
    require_distance(d_m)?;
    require_frequency(f_ghz)?;
    require_frequency(m.f_avg_ghz)?;
    let slope = m.n * (1.0 + m.b * (f_ghz - m.f_avg_ghz) / m.f_avg_ghz);
    Ok(10.0 * slope * (d_m / REFERENCE_DISTANCE_M).log10() + fspl_db(f_ghz, REFERENCE_DISTANCE_M)?)
}

/// `Σ f_k·N_k / Σ N_k` over (frequency GHz, sample count) pairs.
pub fn weighted_avg_frequency(counts: &[(f64, usize)]) -> Result<f64, ModelError> {
    let total: usize = counts.iter().map(|&(_, n)| n).sum();
    if total == 0 {
        return Err(ModelError::EmptyDataset);
    }
    let weighted: f64 = counts.iter().map(|&(f, n)| f * n as f64).sum();
    Ok(weighted / total as f64)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "model", rename_all = "lowercase")]
pub enum PathLossModel {
    Ci(CiModel),
    Abg(AbgModel),
    Cif(CifModel),
}

impl PathLossModel {
    /// Mean path loss. CI models evaluate at their own frequency and ignore `f_ghz`.
    pub fn predict(&self, d_m: f64, f_ghz: f64) -> Result<f64, ModelError> {
        match self {
            PathLossModel::Ci(m) => ci_predict(m, d_m),
            PathLossModel::Abg(m) => abg_predict(m, d_m, f_ghz),
            PathLossModel::Cif(m) => cif_predict(m, d_m, f_ghz),
        }
    }

    pub fn sigma_sf_db(&self) -> Option<f64> {
        match self {
            PathLossModel::Ci(m) => m.sigma_sf_db,
            PathLossModel::Abg(m) => m.sigma_sf_db,
            PathLossModel::Cif(m) => m.sigma_sf_db,
        }
    }

    pub fn kind(&self) -> PathLossKind {
        match self {
            PathLossModel::Ci(m) => m.kind,
            PathLossModel::Abg(m) => m.kind,
            PathLossModel::Cif(m) => m.kind,
        }
    }

    pub fn scenario(&self) -> Option<Scenario> {
        match self {
            PathLossModel::Ci(m) => m.scenario,
            PathLossModel::Abg(m) => m.scenario,
            PathLossModel::Cif(m) => m.scenario,
        }
    }

    /// Mean path loss plus one shadow-fading draw seeded by `seed`.
    pub fn sample(&self, d_m: f64, f_ghz: f64, seed: u64) -> Result<f64, ModelError> {
        let sigma = self.sigma_sf_db().ok_or(ModelError::NoShadowFading)?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        Ok(self.predict(d_m, f_ghz)? + shadow_fading(sigma, &mut rng)?)
    }
}

/// One zero-mean Gaussian shadow-fading draw in dB.
pub fn shadow_fading<R: rand::Rng + ?Sized>(sigma_db: f64, rng: &mut R) -> Result<f64, ModelError> {
    let normal = Normal::new(0.0, sigma_db).map_err(|_| domain("sigma_sf_db", sigma_db))?;
    Ok(normal.sample(rng))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ci(ple: f64, f: f64) -> CiModel {
        CiModel {
            ple,
            sigma_sf_db: None,
            frequency_ghz: f,
            kind: PathLossKind::BestDirection,
            scenario: None,
        }
    }

    fn abg(alpha: f64, beta_db: f64, gamma: f64) -> AbgModel {
        AbgModel {
            alpha,
            beta_db,
            gamma,
            sigma_sf_db: None,
            r_squared: None,
            kind: PathLossKind::BestDirection,
            scenario: None,
        }
    }

    fn cif(n: f64, b: f64, f_avg: f64) -> CifModel {
        CifModel {
            n,
            b,
            f_avg_ghz: f_avg,
            sigma_sf_db: None,
            r_squared: None,
            kind: PathLossKind::BestDirection,
            scenario: None,
        }
    }

    #[test]
    fn fspl_reference_values() {
        // 20·log10(4π·f/c) evaluated by hand:
        // 140 GHz: 4π·140e9/299792458 = 5868.30 → 75.3701 dB
        // 220 GHz: 9221.62 → 79.2959 dB; 180 GHz: 7545.0 → 77.5530 dB
        assert!((fspl_db(140.0, 1.0).unwrap() - 75.37).abs() < 0.01);
        assert!((fspl_db(220.0, 1.0).unwrap() - 79.30).abs() < 0.01);
        assert!((fspl_db(180.0, 1.0).unwrap() - 77.56).abs() < 0.01);
        let step = fspl_db(140.0, 8.0).unwrap() - fspl_db(140.0, 4.0).unwrap();
        assert!((step - 20.0 * 2f64.log10()).abs() < 1e-12);
        assert!(fspl_db(0.0, 1.0).is_err());
        assert!(fspl_db(140.0, -1.0).is_err());
    }

    #[test]
    fn ci_examples() {
        assert_eq!(ci_predict(&ci(2.7, 140.0), 1.0).unwrap(), fspl_db(140.0, 1.0).unwrap());
        assert!((ci_predict(&ci(1.94, 140.0), 10.0).unwrap() - 94.77).abs() < 0.05);
        assert!((ci_predict(&ci(2.78, 220.0), 10.0).unwrap() - 107.10).abs() < 0.05);
        assert!(matches!(
            ci_predict(&ci(2.0, 140.0), 0.5),
            Err(ModelError::DomainError { .. })
        ));
    }

    #[test]
    fn abg_examples() {
        assert_eq!(abg_predict(&abg(2.0, 33.3, 2.5), 1.0, 1.0).unwrap(), 33.3);
        assert!((abg_predict(&abg(2.21, 21.65, 2.41), 10.0, 140.0).unwrap() - 95.47).abs() < 0.05);
        // 11.54 + 29.4·log10(220) = 80.407
        assert!((abg_predict(&abg(1.29, 11.54, 2.94), 1.0, 220.0).unwrap() - 80.38).abs() < 0.05);
        assert!(abg_predict(&abg(2.0, 1.0, 1.0), 10.0, 0.0).is_err());
    }

    #[test]
    fn cif_examples() {
        let m = cif(2.3, 0.2, 180.0);
        let as_ci = ci(2.3, 180.0);
        assert!((cif_predict(&m, 7.0, 180.0).unwrap() - ci_predict(&as_ci, 7.0).unwrap()).abs() < 1e-12);
        assert_eq!(cif_predict(&m, 1.0, 205.0).unwrap(), fspl_db(205.0, 1.0).unwrap());
        let office = cif(2.13, 0.044, 182.18);
        assert!((cif_predict(&office, 10.0, 140.0).unwrap() - 96.46).abs() < 0.05);
    }

    #[test]
    fn cif_matches_ci_when_slope_zero() {
        for &(d, f) in &[(1.0, 140.0), (3.5, 140.0), (20.0, 220.0)] {
            let a = cif_predict(&cif(1.8, 0.0, 180.0), d, f).unwrap();
            let b = ci_predict(&ci(1.8, f), d).unwrap();
            assert_eq!(a, b);
        }
    }

    #[test]
    fn weighted_average_examples() {
        assert_eq!(weighted_avg_frequency(&[(140.0, 100), (220.0, 100)]).unwrap(), 180.0);
        // N2/N1 = 1231/1000 reproduces the meeting-room f0
        let f = weighted_avg_frequency(&[(140.0, 1000), (220.0, 1231)]).unwrap();
        assert!((f - 184.14).abs() < 0.005);
        assert_eq!(weighted_avg_frequency(&[(140.0, 50)]).unwrap(), 140.0);
        assert_eq!(weighted_avg_frequency(&[(140.0, 0)]), Err(ModelError::EmptyDataset));
        assert_eq!(weighted_avg_frequency(&[]), Err(ModelError::EmptyDataset));
    }

    #[test]
    fn seeded_sampling_is_reproducible() {
        let mut m = ci(2.0, 140.0);
        let model = PathLossModel::Ci(m.clone());
        assert_eq!(model.sample(5.0, 140.0, 1), Err(ModelError::NoShadowFading));
        m.sigma_sf_db = Some(3.0);
        let model = PathLossModel::Ci(m);
        let a = model.sample(5.0, 140.0, 42).unwrap();
        assert_eq!(a, model.sample(5.0, 140.0, 42).unwrap());
        assert_ne!(a, model.sample(5.0, 140.0, 43).unwrap());
        let mut zero = ci(2.0, 140.0);
        zero.sigma_sf_db = Some(0.0);
        let z = PathLossModel::Ci(zero);
        assert_eq!(z.sample(5.0, 140.0, 9).unwrap(), z.predict(5.0, 140.0).unwrap());
    }

    #[test]
    fn fspl_distance_additivity() {
        for &(f, d1, d2) in &[(140.0, 1.0, 3.0), (220.0, 2.5, 4.0), (95.0, 1.2, 17.0)] {
            let lhs = fspl_db(f, d1).unwrap() + 20.0 * f64::log10(d2);
            assert!((lhs - fspl_db(f, d1 * d2).unwrap()).abs() < 1e-9);
        }
    }
}
