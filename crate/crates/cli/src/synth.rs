//! Synthetic sounding campaigns written as sweep CSV.
//!
//! `FreeSpace` places a single line-of-sight path on a grid direction;
//! `Room` traces the meeting-room rectangle by the image method, dropping
//! the direct path for the NLoS scenario. An optional system response is
//! embedded in every scan together with the matching calibration record.

use std::str::FromStr;

use thz_pathloss::calibration::CalibrationRecord;
use thz_pathloss::models::presets::NominalBand;
use thz_pathloss::synth::room::RectangularRoom;
use thz_pathloss::synth::{
    calibration_for, derive_seed, embed_system_response, free_space_environment, synthesize_scan, system_response,
    VirtualEnvironment,
};
use thz_pathloss::types::{AngularGrid, DirectionalScan, FrequencyBand, Scenario, SounderConfig, SPEED_OF_LIGHT};

use crate::error::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Environment {
    FreeSpace,
    Room,
}

impl FromStr for Environment {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "free-space" => Ok(Environment::FreeSpace),
            "room" => Ok(Environment::Room),
            other => Err(format!("unknown environment '{other}' (free-space, room)")),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SynthOptions {
    pub scenario: Scenario,
    pub environment: Environment,
    pub bands: Vec<NominalBand>,
    pub distances_m: Vec<f64>,
    pub n_azimuth: usize,
    pub n_elevation: usize,
    /// Frequency points per band at the sounder's 10 MHz step; full sweep when `None`.
    pub n_points: Option<usize>,
    pub system_response: bool,
    pub noise: bool,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SynthCampaign {
    /// Channel-only scans (what calibration should recover).
    pub truth: Vec<DirectionalScan>,
    /// Scans as written to disk, with the system response embedded if requested.
    pub measured: Vec<DirectionalScan>,
    pub calibrations: Vec<CalibrationRecord>,
}

const ROOM_TX: (f64, f64) = (0.5, 3.95);
const ROOM_BEARING_DEG: f64 = 10.0;
const CAL_ATTENUATION_DB: f64 = 30.0;

pub fn sounder_config(band: NominalBand, opts: &SynthOptions) -> Result<SounderConfig, CliError> {
    let mut cfg = match band {
        NominalBand::G140 => SounderConfig::sounder_140(),
        NominalBand::G220 => SounderConfig::sounder_220(),
    };
    if let Some(n) = opts.n_points {
        let start = cfg.band.start_hz();
        let end = start + (n.max(2) - 1) as f64 * cfg.band.step_hz();
        cfg.band = FrequencyBand::infer(start, end, n).map_err(|e| CliError::Usage(e.to_string()))?;
    }
    let el0 = -10.0 * ((opts.n_elevation.max(1) - 1) / 2) as f64;
    cfg.grid = AngularGrid::uniform(0.0, opts.n_azimuth, el0, opts.n_elevation, 10.0)
        .map_err(|e| CliError::Usage(e.to_string()))?;
    Ok(cfg)
}

fn slug(s: Scenario) -> String {
    s.name().to_lowercase().replace(' ', "-")
}

fn environment(
    opts: &SynthOptions,
    cfg: &SounderConfig,
    id: String,
    k: usize,
    d: f64,
    seed: u64,
) -> Result<VirtualEnvironment, CliError> {
    let f_ghz = cfg.band.nominal_ghz();
    let mut env = match opts.environment {
        Environment::FreeSpace => free_space_environment(id, cfg, opts.scenario, d, f_ghz, seed),
        Environment::Room => {
            let room = RectangularRoom::meeting_room();
            let bearing = ROOM_BEARING_DEG.to_radians();
            let rx = (ROOM_TX.0 + d * bearing.cos(), ROOM_TX.1 + d * bearing.sin());
            if !(rx.0 > 0.0 && rx.0 < room.width_m && rx.1 > 0.0 && rx.1 < room.depth_m) {
                return Err(CliError::Domain(format!("placement at {d} m falls outside the room")));
            }
            let mut mpcs = room.mpcs(ROOM_TX, rx, f_ghz, cfg.band.max_path_length_m());
            if opts.scenario == Scenario::NLoS {
                mpcs.retain(|p| (p.delay_s * SPEED_OF_LIGHT - d).abs() > 1e-9);
            }
            VirtualEnvironment {
                scan_id: id,
                tx_id: "Tx".into(),
                rx_id: String::new(),
                distance_m: d,
                scenario: opts.scenario,
                mpcs,
                rng_seed: seed,
                add_noise: true,
            }
        }
    };
    env.rx_id = format!("Rx{k:03}");
    env.add_noise = opts.noise;
    Ok(env)
}

/// Generates every (band, distance) placement. Seeds: placement `k` of band
/// `b` uses `derive_seed(seed, b·2³² + k)`; the band's system response uses
/// `derive_seed(seed, b·2³² + 2³¹)`.
pub fn generate(opts: &SynthOptions) -> Result<SynthCampaign, CliError> {
    if opts.distances_m.is_empty() {
        return Err(CliError::Usage("no placement distances".into()));
    }
    let mut out = SynthCampaign {
        truth: Vec::new(),
        measured: Vec::new(),
        calibrations: Vec::new(),
    };
    for &band in &opts.bands {
        let b = match band {
            NominalBand::G140 => 0u64,
            NominalBand::G220 => 1u64,
        };
        let cfg = sounder_config(band, opts)?;
        let label = cfg.band.label().to_string();
        let h_sys = opts
            .system_response
            .then(|| system_response(&cfg.band, derive_seed(opts.seed, (b << 32) + (1 << 31))));
        for (k, &d) in opts.distances_m.iter().enumerate() {
            let id = format!("{}-{label}-{k:03}", slug(opts.scenario));
            let env = environment(opts, &cfg, id, k, d, derive_seed(opts.seed, (b << 32) + k as u64))?;
            let scan = synthesize_scan(&env, &cfg)?;
            let measured = match &h_sys {
                Some(h) => embed_system_response(&scan, h),
                None => scan.clone(),
            };
            out.truth.push(scan);
            out.measured.push(measured);
        }
        if let Some(h) = &h_sys {
            out.calibrations
                .push(calibration_for(format!("system-{label}"), &cfg.band, h, CAL_ATTENUATION_DB)?);
        }
    }
    Ok(out)
}

/// `n` distances evenly spaced over `[min, max]`.
pub fn linspace(min: f64, max: f64, n: usize) -> Vec<f64> {
    match n {
        0 => Vec::new(),
        1 => vec![min],
        _ => (0..n).map(|k| min + (max - min) * k as f64 / (n - 1) as f64).collect(),
    }
}
