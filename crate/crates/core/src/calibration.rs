//! Removal of the sounding-system response from measured sweeps.
//!
//! A back-to-back measurement through an attenuator gives
//! `S_cal = H_att · H_sys`; a channel measurement gives
//! `S_meas = H_sys · H_chan`. The channel follows as
//! `H_chan = S_meas · H_att / S_cal`, applied per frequency point with no
//! smoothing.

use num_complex::Complex64;
use thiserror::Error;

use crate::types::{DirectionalScan, FrequencyBand};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum CalibrationError {
    #[error("calibration band {cal} does not match scan band {scan}")]
    BandMismatch { scan: String, cal: String },
    #[error("calibration vector '{which}' has {found} points, band has {expected}")]
    LengthMismatch {
        which: &'static str,
        expected: usize,
        found: usize,
    },
    #[error("calibration sweep is zero at frequency index {0}")]
    DivisionByZero(usize),
}

/// Back-to-back calibration sweep together with the known attenuator
/// response, both over the band's frequency points.
#[derive(Debug, Clone, PartialEq)]
pub struct CalibrationRecord {
    pub name: String,
    band: FrequencyBand,
    s_calibration: Vec<Complex64>,
    h_attenuator: Vec<Complex64>,
}

impl CalibrationRecord {
    pub fn new(
        name: impl Into<String>,
        band: FrequencyBand,
        s_calibration: Vec<Complex64>,
        h_attenuator: Vec<Complex64>,
    ) -> Result<Self, CalibrationError> {
        let n = band.n_points();
        for (which, v) in [("s_calibration", &s_calibration), ("h_attenuator", &h_attenuator)] {
            if v.len() != n {
                return Err(CalibrationError::LengthMismatch {
                    which,
                    expected: n,
                    found: v.len(),
                });
            }
        }
        if let Some(s) = s_calibration.iter().position(|c| c.norm() == 0.0) {
            return Err(CalibrationError::DivisionByZero(s));
        }
        Ok(Self {
            name: name.into(),
            band,
            s_calibration,
            h_attenuator,
        })
    }

    /// Record for an attenuator of flat linear amplitude `attenuator` seen
    /// through the system response `h_system`.
    pub fn from_system_response(
        name: impl Into<String>,
        band: FrequencyBand,
        h_system: &[Complex64],
        attenuator: Complex64,
    ) -> Result<Self, CalibrationError> {
        let s_cal = h_system.iter().map(|h| attenuator * h).collect();
        let h_att = vec![attenuator; h_system.len()];
        Self::new(name, band, s_cal, h_att)
    }

    pub fn band(&self) -> &FrequencyBand {
        &self.band
    }

    pub fn s_calibration(&self) -> &[Complex64] {
        &self.s_calibration
    }

    pub fn h_attenuator(&self) -> &[Complex64] {
        &self.h_attenuator
    }

    /// Per-frequency correction factor `H_att / S_cal` (= 1 / H_sys).
    pub fn correction(&self) -> Vec<Complex64> {
        self.h_attenuator
            .iter()
            .zip(&self.s_calibration)
            .map(|(a, s)| a / s)
            .collect()
    }
}

/// Returns `raw` with every direction's response multiplied by
/// `H_att[s] / S_cal[s]`. Metadata is carried over unchanged.
pub fn calibrate(
    raw: &DirectionalScan,
    cal: &CalibrationRecord,
) -> Result<DirectionalScan, CalibrationError> {
    if !raw.config.band.same_sweep(&cal.band) {
        return Err(CalibrationError::BandMismatch {
            scan: raw.config.band.label().to_string(),
            cal: cal.band.label().to_string(),
        });
    }
    let n_f = cal.band.n_points();
    if raw.s21.dims().2 != n_f {
        return Err(CalibrationError::LengthMismatch {
            which: "scan",
            expected: n_f,
            found: raw.s21.dims().2,
        });
    }
    let mut out = raw.clone();
    for chunk in out.s21.as_mut_slice().chunks_mut(n_f) {
        for ((h, a), s) in chunk.iter_mut().zip(&cal.h_attenuator).zip(&cal.s_calibration) {
            *h = *h * a / s;
        }
    }
    Ok(out)
}
