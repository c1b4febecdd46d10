//! Synthetic sounding data with known ground truth.
//!
//! [`synthesize_scan`] renders a list of multipath components into a
//! directional S21 scan through an idealised receive pattern;
//! [`synthesize_campaign`] draws path-loss samples straight from a model.
//!
//! The antenna pattern is a Gaussian main lobe with power
//! `exp(-4·ln2·(Δ/HPBW)²)` per axis, applied separably to the azimuth and
//! elevation offsets and cut to zero at `|Δ| ≥ HPBW` (no sidelobes). With a
//! rotation step equal to the HPBW a path sitting on a grid direction is
//! seen by that beam only.
//!
//! Placement seeds are derived with [`derive_seed`]: the SplitMix64
//! finaliser applied to `base + index·0x9E3779B97F4A7C15`.

pub mod room;

use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use thiserror::Error;

use crate::calibration::{CalibrationError, CalibrationRecord};
use crate::fitting::{Dataset, FitError};
use crate::models::{shadow_fading, ModelError, PathLossModel};
use crate::types::{
    DirectionalScan, FrequencyBand, S21Cube, Scenario, SounderConfig, REFERENCE_DISTANCE_M,
    SPEED_OF_LIGHT,
};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SynthError {
    #[error("path {index}: gain {gain} must be finite and non-negative")]
    InvalidGain { index: usize, gain: f64 },
    #[error("path {index}: delay {delay_s} s outside [0, {max_delay_s}] s")]
    DelayOutOfRange {
        index: usize,
        delay_s: f64,
        max_delay_s: f64,
    },
    #[error("placement distance {0} m must be positive")]
    InvalidDistance(f64),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Fit(#[from] FitError),
    #[error(transparent)]
    Calibration(#[from] CalibrationError),
}

/// One propagation path arriving at the receiver.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Mpc {
    /// End-to-end linear amplitude with antenna boresight gains folded in.
    pub gain: f64,
    pub delay_s: f64,
    pub azimuth_deg: f64,
    pub elevation_deg: f64,
    /// Departure angle off the Tx boresight.
    pub tx_offset_deg: f64,
}

impl Mpc {
    pub fn new(gain: f64, delay_s: f64, azimuth_deg: f64, elevation_deg: f64) -> Self {
        Self {
            gain,
            delay_s,
            azimuth_deg,
            elevation_deg,
            tx_offset_deg: 0.0,
        }
    }
}

/// A placement described by its multipath components.
#[derive(Debug, Clone, PartialEq)]
pub struct VirtualEnvironment {
    pub scan_id: String,
    pub tx_id: String,
    pub rx_id: String,
    pub distance_m: f64,
    pub scenario: Scenario,
    pub mpcs: Vec<Mpc>,
    pub rng_seed: u64,
    /// Add receiver noise at the configured floor.
    pub add_noise: bool,
}

impl VirtualEnvironment {
    /// Checks gains and that every delay is detectable within the band.
    pub fn check(&self, band: &FrequencyBand) -> Result<(), SynthError> {
        if !(self.distance_m.is_finite() && self.distance_m > 0.0) {
            return Err(SynthError::InvalidDistance(self.distance_m));
        }
        let max_delay_s = band.max_excess_delay_s();
        for (index, p) in self.mpcs.iter().enumerate() {
            if !(p.gain.is_finite() && p.gain >= 0.0) {
                return Err(SynthError::InvalidGain { index, gain: p.gain });
            }
            if !(p.delay_s >= 0.0 && p.delay_s <= max_delay_s) {
                return Err(SynthError::DelayOutOfRange {
                    index,
                    delay_s: p.delay_s,
                    max_delay_s,
                });
            }
        }
        Ok(())
    }
}

/// Free-space amplitude `c / (4π·f·d)`.
pub fn free_space_gain(f_ghz: f64, d_m: f64) -> f64 {
    SPEED_OF_LIGHT / (4.0 * std::f64::consts::PI * f_ghz * 1e9 * d_m)
}

/// Wraps an angle difference into [-180, 180).
pub fn wrap_deg(delta: f64) -> f64 {
    let d = (delta + 180.0).rem_euclid(360.0);
    d - 180.0
}

/// Amplitude of the truncated Gaussian lobe at `offset_deg` off boresight.
pub fn lobe_amplitude(offset_deg: f64, hpbw_deg: f64) -> f64 {
    let x = offset_deg.abs() / hpbw_deg;
    if x >= 1.0 - 1e-9 {
        return 0.0;
    }
    (-2.0 * std::f64::consts::LN_2 * x * x).exp()
}

/// Receive-beam amplitude for a path at (`az`, `el`) when the scanner
/// points at (`beam_az`, `beam_el`).
pub fn rx_pattern(az: f64, el: f64, beam_az: f64, beam_el: f64, hpbw_deg: f64) -> f64 {
    lobe_amplitude(wrap_deg(az - beam_az), hpbw_deg) * lobe_amplitude(el - beam_el, hpbw_deg)
}

/// Renders `env` into a directional scan:
/// `S21[i,j,s] = Σ_p g_p·A_rx·A_tx·exp(−j2π f_s τ_p) + n`, with circular
/// Gaussian noise of power `10^((P_N − P_in)/10)` when enabled.
pub fn synthesize_scan(env: &VirtualEnvironment, cfg: &SounderConfig) -> Result<DirectionalScan, SynthError> {
    env.check(&cfg.band)?;
    let grid = &cfg.grid;
    let band = &cfg.band;
    let n_f = band.n_points();
    let freqs: Vec<f64> = band.frequencies_hz().collect();
    let mut s21 = S21Cube::zeros(grid.n_azimuth(), grid.n_elevation(), n_f);
    for (i, &beam_az) in grid.azimuth_deg().iter().enumerate() {
        for (j, &beam_el) in grid.elevation_deg().iter().enumerate() {
            let response = s21.response_mut(i, j);
            for p in &env.mpcs {
                let a = p.gain
                    * rx_pattern(p.azimuth_deg, p.elevation_deg, beam_az, beam_el, cfg.rx_hpbw_deg)
                    * lobe_amplitude(p.tx_offset_deg, cfg.tx_hpbw_deg);
                if a == 0.0 {
                    continue;
                }
                for (h, f) in response.iter_mut().zip(&freqs) {
                    *h += Complex64::from_polar(a, -2.0 * std::f64::consts::PI * f * p.delay_s);
                }
            }
        }
    }
    if env.add_noise {
        let sigma = cfg.noise_amplitude() / std::f64::consts::SQRT_2;
        let normal = Normal::new(0.0, sigma).map_err(|_| ModelError::DomainError {
            what: "noise_floor_dbm",
            value: cfg.noise_floor_dbm,
        })?;
        let mut rng = ChaCha8Rng::seed_from_u64(env.rng_seed);
        for h in s21.as_mut_slice() {
            *h += Complex64::new(normal.sample(&mut rng), normal.sample(&mut rng));
        }
    }
    Ok(DirectionalScan {
        scan_id: env.scan_id.clone(),
        config: cfg.clone(),
        tx_id: env.tx_id.clone(),
        rx_id: env.rx_id.clone(),
        distance_m: env.distance_m,
        scenario: env.scenario,
        s21,
    })
}

/// SplitMix64-mixed seed for placement `index` of a campaign seeded with `base`.
pub fn derive_seed(base: u64, index: u64) -> u64 {
    let mut z = base.wrapping_add(index.wrapping_mul(0x9E37_79B9_7F4A_7C15));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Line-of-sight-only placement at `distance_m`, the path arriving on the
/// first grid direction with free-space amplitude at `f_ghz`.
pub fn free_space_environment(
    scan_id: impl Into<String>,
    cfg: &SounderConfig,
    scenario: Scenario,
    distance_m: f64,
    f_ghz: f64,
    seed: u64,
) -> VirtualEnvironment {
    let (az, el) = cfg.grid.direction(0, cfg.grid.n_elevation() / 2);
    VirtualEnvironment {
        scan_id: scan_id.into(),
        tx_id: "Tx".into(),
        rx_id: format!("Rx@{distance_m}m"),
        distance_m,
        scenario,
        mpcs: vec![Mpc::new(
            free_space_gain(f_ghz, distance_m),
            distance_m / SPEED_OF_LIGHT,
            az,
            el,
        )],
        rng_seed: seed,
        add_noise: true,
    }
}

/// Smooth synthetic sounding-system response: amplitude ripple on a
/// cable-delay phase slope. Never zero.
pub fn system_response(band: &FrequencyBand, seed: u64) -> Vec<Complex64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let u = rand_distr::Uniform::new(0.0, 1.0).expect("static range");
    let (a1, a2, a3): (f64, f64, f64) = (u.sample(&mut rng), u.sample(&mut rng), u.sample(&mut rng));
    let cable_delay_s = 5e-9 + 10e-9 * a1;
    let n = band.n_points() as f64;
    band.frequencies_hz()
        .enumerate()
        .map(|(s, f)| {
            let x = s as f64 / n;
            let amp = 0.3 * (1.0 + 0.25 * (2.0 * std::f64::consts::PI * (3.0 + 4.0 * a2) * x).sin());
            let phase = -2.0 * std::f64::consts::PI * f * cable_delay_s
                + 0.4 * (2.0 * std::f64::consts::PI * (2.0 + 5.0 * a3) * x).cos();
            Complex64::from_polar(amp, phase)
        })
        .collect()
}

/// Applies `h_system` to every direction of `scan` (the inverse of calibration).
pub fn embed_system_response(scan: &DirectionalScan, h_system: &[Complex64]) -> DirectionalScan {
    let mut out = scan.clone();
    let n_f = h_system.len();
    for chunk in out.s21.as_mut_slice().chunks_mut(n_f) {
        for (h, sys) in chunk.iter_mut().zip(h_system) {
            *h *= sys;
        }
    }
    out
}

/// Calibration record for `h_system` measured through a flat attenuator of
/// `attenuation_db`.
pub fn calibration_for(
    name: impl Into<String>,
    band: &FrequencyBand,
    h_system: &[Complex64],
    attenuation_db: f64,
) -> Result<CalibrationRecord, SynthError> {
    let att = Complex64::new(10f64.powf(-attenuation_db / 20.0), 0.0);
    Ok(CalibrationRecord::from_system_response(name, band.clone(), h_system, att)?)
}

/// Distances and frequencies of a sampled campaign.
#[derive(Debug, Clone, PartialEq)]
pub struct CampaignPlan {
    pub scenario: Scenario,
    pub distances_m: Vec<f64>,
    /// Used by ABG and CIF models; CI models sample at their own frequency.
    pub frequencies_ghz: Vec<f64>,
}

/// Path-loss samples `PL = model(d, f) + N(0, σ_SF²)`, one per
/// (frequency, distance), drawn in that order from a generator seeded with
/// `seed`. Models without σ produce noiseless samples.
pub fn synthesize_campaign(
    model: &PathLossModel,
    plan: &CampaignPlan,
    seed: u64,
) -> Result<Dataset, SynthError> {
    let freqs = match model {
        PathLossModel::Ci(m) => vec![m.frequency_ghz],
        _ => plan.frequencies_ghz.clone(),
    };
    let sigma = model.sigma_sf_db().unwrap_or(0.0);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut samples = Vec::with_capacity(freqs.len() * plan.distances_m.len());
    for &f in &freqs {
        for (k, &d) in plan.distances_m.iter().enumerate() {
            if d < REFERENCE_DISTANCE_M {
                return Err(ModelError::DomainError {
                    what: "distance_m",
                    value: d,
                }
                .into());
            }
            let mean = model.predict(d, f)?;
            let fading = if sigma > 0.0 { shadow_fading(sigma, &mut rng)? } else { 0.0 };
            samples.push(crate::types::PathLossSample {
                scan_id: format!("synth-{f}GHz-{k}"),
                scenario: plan.scenario,
                distance_m: d,
                frequency_ghz: f,
                pl_db: mean + fading,
                kind: model.kind(),
            });
        }
    }
    Ok(Dataset::new(samples)?)
}
