//! Domain types shared by every stage of the pipeline: frequency sweeps,
//! angular scan grids, sounder configuration, directional S21 scans and
//! extracted path-loss samples.
//!
//! Angles are kept in degrees throughout and converted to radians only
//! inside trigonometric code. S21 values are linear complex amplitudes.

use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Speed of light in vacuum, m/s.
pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;

/// Close-in reference distance d0 in metres.
pub const REFERENCE_DISTANCE_M: f64 = 1.0;

/// Reference frequency f0 in GHz used by the frequency term of the ABG model.
pub const REFERENCE_FREQUENCY_GHZ: f64 = 1.0;

/// Tolerance used when matching angles against a grid lattice, in degrees.
pub const ANGLE_TOLERANCE_DEG: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ConfigError {
    #[error("band end {end_hz} Hz must exceed start {start_hz} Hz")]
    EmptyBand { start_hz: f64, end_hz: f64 },
    #[error("band needs at least 2 sweep points, got {0}")]
    TooFewPoints(usize),
    #[error("band edges must be finite and positive")]
    NonFiniteBand,
    #[error("angular grid is empty")]
    EmptyGrid,
    #[error("angular step must be positive and finite, got {0}")]
    InvalidStep(f64),
    #[error("{axis} angle {value} deg out of range")]
    AngleOutOfRange { axis: &'static str, value: f64 },
    #[error("{axis} angles are not a strictly increasing lattice with step {step} deg")]
    NonUniformAxis { axis: &'static str, step: f64 },
    #[error("noise floor {noise_floor_dbm} dBm leaves no link budget at d0 ({budget_dbm} dBm)")]
    NoLinkBudget { noise_floor_dbm: f64, budget_dbm: f64 },
    #[error("S21 cube holds {found} values, expected {expected}")]
    CubeSize { expected: usize, found: usize },
}

// ---------------------------------------------------------------------------
// Frequency band
// ---------------------------------------------------------------------------

/// A linear frequency sweep from `start_hz` to `end_hz` inclusive.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawBand")]
pub struct FrequencyBand {
    start_hz: f64,
    end_hz: f64,
    n_points: usize,
    label: String,
}

#[derive(Deserialize)]
struct RawBand {
    start_hz: f64,
    end_hz: f64,
    n_points: usize,
    label: String,
}

impl TryFrom<RawBand> for FrequencyBand {
    type Error = ConfigError;

    fn try_from(raw: RawBand) -> Result<Self, Self::Error> {
        FrequencyBand::new(raw.start_hz, raw.end_hz, raw.n_points, raw.label)
    }
}

impl FrequencyBand {
    pub fn new(
        start_hz: f64,
        end_hz: f64,
        n_points: usize,
        label: impl Into<String>,
    ) -> Result<Self, ConfigError> {
        if !start_hz.is_finite() || !end_hz.is_finite() || start_hz <= 0.0 {
            return Err(ConfigError::NonFiniteBand);
        }
        if end_hz <= start_hz {
            return Err(ConfigError::EmptyBand { start_hz, end_hz });
        }
        if n_points < 2 {
            return Err(ConfigError::TooFewPoints(n_points));
        }
        Ok(Self {
            start_hz,
            end_hz,
            n_points,
            label: label.into(),
        })
    }

    /// The 130-143 GHz sweep of the 140 GHz sounder (1301 points, 10 MHz step).
    pub fn sounder_140() -> Self {
        Self::new(130e9, 143e9, 1301, "140GHz").expect("static band")
    }

    /// The 201-209 GHz sweep of the 220 GHz sounder (801 points, 10 MHz step).
    pub fn sounder_220() -> Self {
        Self::new(201e9, 209e9, 801, "220GHz").expect("static band")
    }

    /// Builds a band from sweep edges, labelling it after the matching
    /// sounder when the edges coincide with one.
    pub fn infer(start_hz: f64, end_hz: f64, n_points: usize) -> Result<Self, ConfigError> {
        for known in [Self::sounder_140(), Self::sounder_220()] {
            if known.start_hz == start_hz && known.end_hz == end_hz {
                return Self::new(start_hz, end_hz, n_points, known.label);
            }
        }
        let center_ghz = (start_hz + end_hz) / 2e9;
        Self::new(start_hz, end_hz, n_points, format!("{center_ghz}GHz"))
    }

    pub fn start_hz(&self) -> f64 {
        self.start_hz
    }

    pub fn end_hz(&self) -> f64 {
        self.end_hz
    }

    pub fn n_points(&self) -> usize {
        self.n_points
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn span_hz(&self) -> f64 {
        self.end_hz - self.start_hz
    }

    /// Sweep interval Δf.
    pub fn step_hz(&self) -> f64 {
        self.span_hz() / (self.n_points - 1) as f64
    }

    pub fn center_hz(&self) -> f64 {
        (self.start_hz + self.end_hz) / 2.0
    }

    pub fn center_ghz(&self) -> f64 {
        self.center_hz() / 1e9
    }

    /// Frequency of sweep point `s`; the last point is pinned to `end_hz`.
    pub fn frequency_hz(&self, s: usize) -> f64 {
        if s + 1 == self.n_points {
            self.end_hz
        } else {
            self.start_hz + s as f64 * self.step_hz()
        }
    }

    pub fn frequencies_hz(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.n_points).map(|s| self.frequency_hz(s))
    }

    /// Delay resolution Δt = 1/B.
    pub fn delay_resolution_s(&self) -> f64 {
        1.0 / self.span_hz()
    }

    /// Maximum detectable delay τ_m = 1/Δf.
    pub fn max_excess_delay_s(&self) -> f64 {
        1.0 / self.step_hz()
    }

    /// Longest detectable path L_m = c·τ_m.
    pub fn max_path_length_m(&self) -> f64 {
        SPEED_OF_LIGHT * self.max_excess_delay_s()
    }

    /// Nominal frequency carried by the label (`"140GHz"` → 140), falling
    /// back to the sweep centre for labels that are not a number.
    pub fn nominal_ghz(&self) -> f64 {
        self.label
            .trim()
            .trim_end_matches("GHz")
            .trim()
            .parse::<f64>()
            .ok()
            .filter(|f| f.is_finite() && *f > 0.0)
            .unwrap_or_else(|| self.center_ghz())
    }

    /// Same sweep (edges and point count); labels are not compared.
    pub fn same_sweep(&self, other: &FrequencyBand) -> bool {
        self.start_hz == other.start_hz
            && self.end_hz == other.end_hz
            && self.n_points == other.n_points
    }
}

// ---------------------------------------------------------------------------
// Angular grid
// ---------------------------------------------------------------------------

/// Receiver rotation grid. Azimuth in [0, 360), elevation in [-90, 90],
/// both uniform with a common step.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawGrid")]
pub struct AngularGrid {
    azimuth_deg: Vec<f64>,
    elevation_deg: Vec<f64>,
    step_deg: f64,
}

#[derive(Deserialize)]
struct RawGrid {
    azimuth_deg: Vec<f64>,
    elevation_deg: Vec<f64>,
    step_deg: f64,
}

impl TryFrom<RawGrid> for AngularGrid {
    type Error = ConfigError;

    fn try_from(raw: RawGrid) -> Result<Self, Self::Error> {
        AngularGrid::new(raw.azimuth_deg, raw.elevation_deg, raw.step_deg)
    }
}

fn check_axis(
    axis: &'static str,
    values: &[f64],
    step: f64,
    range: (f64, f64, bool),
) -> Result<(), ConfigError> {
    let (lo, hi, hi_inclusive) = range;
    for &v in values {
        let above = if hi_inclusive { v > hi } else { v >= hi };
        if !v.is_finite() || v < lo || above {
            return Err(ConfigError::AngleOutOfRange { axis, value: v });
        }
    }
    for pair in values.windows(2) {
        if ((pair[1] - pair[0]) - step).abs() > ANGLE_TOLERANCE_DEG {
            return Err(ConfigError::NonUniformAxis { axis, step });
        }
    }
    Ok(())
}

impl AngularGrid {
    pub fn new(
        azimuth_deg: Vec<f64>,
        elevation_deg: Vec<f64>,
        step_deg: f64,
    ) -> Result<Self, ConfigError> {
        if !(step_deg.is_finite() && step_deg > 0.0) {
            return Err(ConfigError::InvalidStep(step_deg));
        }
        if azimuth_deg.is_empty() || elevation_deg.is_empty() {
            return Err(ConfigError::EmptyGrid);
        }
        check_axis("azimuth", &azimuth_deg, step_deg, (0.0, 360.0, false))?;
        check_axis("elevation", &elevation_deg, step_deg, (-90.0, 90.0, true))?;
        Ok(Self {
            azimuth_deg,
            elevation_deg,
            step_deg,
        })
    }

    pub fn uniform(
        azimuth_start: f64,
        n_azimuth: usize,
        elevation_start: f64,
        n_elevation: usize,
        step_deg: f64,
    ) -> Result<Self, ConfigError> {
        let az = (0..n_azimuth)
            .map(|i| azimuth_start + i as f64 * step_deg)
            .collect();
        let el = (0..n_elevation)
            .map(|j| elevation_start + j as f64 * step_deg)
            .collect();
        Self::new(az, el, step_deg)
    }

    /// 36 × 5 scan: azimuth 0..350°, elevation -20..20°, 10° step.
    pub fn sounder() -> Self {
        Self::uniform(0.0, 36, -20.0, 5, 10.0).expect("static grid")
    }

    pub fn azimuth_deg(&self) -> &[f64] {
        &self.azimuth_deg
    }

    pub fn elevation_deg(&self) -> &[f64] {
        &self.elevation_deg
    }

    pub fn step_deg(&self) -> f64 {
        self.step_deg
    }

    pub fn n_azimuth(&self) -> usize {
        self.azimuth_deg.len()
    }

    pub fn n_elevation(&self) -> usize {
        self.elevation_deg.len()
    }

    /// Number of scanned directions.
    pub fn len(&self) -> usize {
        self.n_azimuth() * self.n_elevation()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn direction(&self, i: usize, j: usize) -> (f64, f64) {
        (self.azimuth_deg[i], self.elevation_deg[j])
    }

    pub fn azimuth_index(&self, azimuth_deg: f64) -> Option<usize> {
        self.azimuth_deg
            .iter()
            .position(|a| (a - azimuth_deg).abs() <= ANGLE_TOLERANCE_DEG)
    }

    pub fn elevation_index(&self, elevation_deg: f64) -> Option<usize> {
        self.elevation_deg
            .iter()
            .position(|e| (e - elevation_deg).abs() <= ANGLE_TOLERANCE_DEG)
    }
}

// ---------------------------------------------------------------------------
// Sounder configuration
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SounderConfig {
    pub band: FrequencyBand,
    pub grid: AngularGrid,
    pub tx_gain_dbi: f64,
    pub rx_gain_dbi: f64,
    pub tx_power_dbm: f64,
    pub noise_floor_dbm: f64,
    pub tx_hpbw_deg: f64,
    pub rx_hpbw_deg: f64,
}

impl SounderConfig {
    /// 140 GHz sounder: 25/15 dBi horns, 1 mW test signal, -120 dBm floor,
    /// 30°/10° HPBW.
    pub fn sounder_140() -> Self {
        Self {
            band: FrequencyBand::sounder_140(),
            grid: AngularGrid::sounder(),
            tx_gain_dbi: 25.0,
            rx_gain_dbi: 15.0,
            tx_power_dbm: 0.0,
            noise_floor_dbm: -120.0,
            tx_hpbw_deg: 30.0,
            rx_hpbw_deg: 10.0,
        }
    }

    /// 220 GHz sounder: same horns and floor, 60°/10° HPBW.
    pub fn sounder_220() -> Self {
        Self {
            band: FrequencyBand::sounder_220(),
            tx_hpbw_deg: 60.0,
            ..Self::sounder_140()
        }
    }

    /// Front-end parameters of the 220 GHz sounder when `band` lies inside
    /// its sweep, otherwise those of the 140 GHz sounder; `band` and `grid`
    /// substituted.
    pub fn for_band(band: FrequencyBand, grid: AngularGrid) -> Self {
        let s220 = FrequencyBand::sounder_220();
        let base = if band.start_hz() >= s220.start_hz() && band.end_hz() <= s220.end_hz() {
            Self::sounder_220()
        } else {
            Self::sounder_140()
        };
        Self { band, grid, ..base }
    }

    pub fn check(&self) -> Result<(), ConfigError> {
        let budget_dbm = self.tx_power_dbm + self.tx_gain_dbi + self.rx_gain_dbi;
        if budget_dbm.is_nan() || self.noise_floor_dbm.is_nan() || self.noise_floor_dbm >= budget_dbm {
            return Err(ConfigError::NoLinkBudget {
                noise_floor_dbm: self.noise_floor_dbm,
                budget_dbm,
            });
        }
        Ok(())
    }

    /// Noise floor expressed as an |S21| amplitude relative to the test signal.
    pub fn noise_amplitude(&self) -> f64 {
        10f64.powf((self.noise_floor_dbm - self.tx_power_dbm) / 20.0)
    }
}

// ---------------------------------------------------------------------------
// Scenario and sample kind
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Scenario {
    #[serde(rename = "Meeting room")]
    MeetingRoom,
    #[serde(rename = "Office area")]
    OfficeArea,
    #[serde(rename = "Hallway")]
    Hallway,
    #[serde(rename = "NLoS")]
    NLoS,
}

impl Scenario {
    pub const ALL: [Scenario; 4] = [
        Scenario::MeetingRoom,
        Scenario::OfficeArea,
        Scenario::Hallway,
        Scenario::NLoS,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Scenario::MeetingRoom => "Meeting room",
            Scenario::OfficeArea => "Office area",
            Scenario::Hallway => "Hallway",
            Scenario::NLoS => "NLoS",
        }
    }
}

impl fmt::Display for Scenario {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("unknown {what} '{value}'")]
pub struct UnknownName {
    pub what: &'static str,
    pub value: String,
}

impl FromStr for Scenario {
    type Err = UnknownName;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let key: String = s
            .chars()
            .filter(|c| c.is_ascii_alphanumeric())
            .collect::<String>()
            .to_ascii_lowercase();
        match key.as_str() {
            "meetingroom" | "meeting" => Ok(Scenario::MeetingRoom),
            "officearea" | "office" => Ok(Scenario::OfficeArea),
            "hallway" => Ok(Scenario::Hallway),
            "nlos" => Ok(Scenario::NLoS),
            _ => Err(UnknownName {
                what: "scenario",
                value: s.to_string(),
            }),
        }
    }
}

/// How a path-loss value was extracted from a directional scan.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(into = "String", try_from = "String")]
pub enum PathLossKind {
    BestDirection,
    Omni,
    Coherent(usize),
    NonCoherent(usize),
}

impl fmt::Display for PathLossKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PathLossKind::BestDirection => f.write_str("best"),
            PathLossKind::Omni => f.write_str("omni"),
            PathLossKind::Coherent(n) => write!(f, "coherent:{n}"),
            PathLossKind::NonCoherent(n) => write!(f, "noncoherent:{n}"),
        }
    }
}

impl FromStr for PathLossKind {
    type Err = UnknownName;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let bad = || UnknownName {
            what: "path-loss kind",
            value: s.to_string(),
        };
        let (head, count) = match s.split_once(':') {
            Some((h, n)) => (h, Some(n.parse::<usize>().map_err(|_| bad())?)),
            None => (s, None),
        };
        match (head.to_ascii_lowercase().as_str(), count) {
            ("best" | "best-direction", None) => Ok(PathLossKind::BestDirection),
            ("omni", None) => Ok(PathLossKind::Omni),
            ("coherent", Some(n)) if n >= 1 => Ok(PathLossKind::Coherent(n)),
            ("noncoherent" | "non-coherent", Some(n)) if n >= 1 => Ok(PathLossKind::NonCoherent(n)),
            _ => Err(bad()),
        }
    }
}

impl From<PathLossKind> for String {
    fn from(kind: PathLossKind) -> String {
        kind.to_string()
    }
}

impl TryFrom<String> for PathLossKind {
    type Error = UnknownName;

    fn try_from(s: String) -> Result<Self, Self::Error> {
        s.parse()
    }
}

/// Which single frequency stands for a band when a model needs one: the
/// nominal label (140/220 GHz) or the sweep centre (136.5/205 GHz).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FrequencyMode {
    #[default]
    Nominal,
    Center,
}

impl FrequencyMode {
    pub fn frequency_ghz(self, band: &FrequencyBand) -> f64 {
        match self {
            FrequencyMode::Nominal => band.nominal_ghz(),
            FrequencyMode::Center => band.center_ghz(),
        }
    }
}

impl FromStr for FrequencyMode {
    type Err = UnknownName;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "nominal" => Ok(FrequencyMode::Nominal),
            "center" | "centre" => Ok(FrequencyMode::Center),
            _ => Err(UnknownName {
                what: "frequency mode",
                value: s.to_string(),
            }),
        }
    }
}

// ---------------------------------------------------------------------------
// Directional scan
// ---------------------------------------------------------------------------

/// Complex S21 values indexed (azimuth i, elevation j, frequency s), stored
/// frequency-fastest.
#[derive(Debug, Clone, PartialEq)]
pub struct S21Cube {
    n_azimuth: usize,
    n_elevation: usize,
    n_freq: usize,
    data: Vec<Complex64>,
}

impl S21Cube {
    pub fn new(
        n_azimuth: usize,
        n_elevation: usize,
        n_freq: usize,
        data: Vec<Complex64>,
    ) -> Result<Self, ConfigError> {
        let expected = n_azimuth * n_elevation * n_freq;
        if data.len() != expected {
            return Err(ConfigError::CubeSize {
                expected,
                found: data.len(),
            });
        }
        Ok(Self {
            n_azimuth,
            n_elevation,
            n_freq,
            data,
        })
    }

    pub fn zeros(n_azimuth: usize, n_elevation: usize, n_freq: usize) -> Self {
        Self {
            n_azimuth,
            n_elevation,
            n_freq,
            data: vec![Complex64::new(0.0, 0.0); n_azimuth * n_elevation * n_freq],
        }
    }

    pub fn dims(&self) -> (usize, usize, usize) {
        (self.n_azimuth, self.n_elevation, self.n_freq)
    }

    fn offset(&self, i: usize, j: usize, s: usize) -> usize {
        (i * self.n_elevation + j) * self.n_freq + s
    }

    pub fn get(&self, i: usize, j: usize, s: usize) -> Complex64 {
        self.data[self.offset(i, j, s)]
    }

    pub fn set(&mut self, i: usize, j: usize, s: usize, value: Complex64) {
        let k = self.offset(i, j, s);
        self.data[k] = value;
    }

    /// Frequency response of direction (i, j).
    pub fn response(&self, i: usize, j: usize) -> &[Complex64] {
        let k = self.offset(i, j, 0);
        &self.data[k..k + self.n_freq]
    }

    pub fn response_mut(&mut self, i: usize, j: usize) -> &mut [Complex64] {
        let k = self.offset(i, j, 0);
        &mut self.data[k..k + self.n_freq]
    }

    pub fn as_slice(&self) -> &[Complex64] {
        &self.data
    }

    pub(crate) fn as_mut_slice(&mut self) -> &mut [Complex64] {
        &mut self.data
    }

    /// Unflattens a linear offset into (i, j, s).
    pub fn unflatten(&self, k: usize) -> (usize, usize, usize) {
        let s = k % self.n_freq;
        let ij = k / self.n_freq;
        (ij / self.n_elevation, ij % self.n_elevation, s)
    }
}

/// One Tx–Rx placement: the full directional sweep measured at that spot.
#[derive(Debug, Clone, PartialEq)]
pub struct DirectionalScan {
    pub scan_id: String,
    pub config: SounderConfig,
    pub tx_id: String,
    pub rx_id: String,
    pub distance_m: f64,
    pub scenario: Scenario,
    pub s21: S21Cube,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ScanViolation {
    #[error("{axis} dimension is {found}, expected {expected}")]
    DimensionMismatch {
        axis: &'static str,
        expected: usize,
        found: usize,
    },
    #[error("non-finite S21 at (azimuth {azimuth_index}, elevation {elevation_index}, frequency {freq_index})")]
    NonFiniteSample {
        azimuth_index: usize,
        elevation_index: usize,
        freq_index: usize,
    },
    #[error("distance must be positive, got {0} m")]
    NonPositiveDistance(f64),
    #[error(transparent)]
    Config(#[from] ConfigError),
}

/// Checks every scan invariant and returns the scan untouched, or the full
/// list of violations.
pub fn validate_scan(scan: DirectionalScan) -> Result<DirectionalScan, Vec<ScanViolation>> {
    let mut violations = Vec::new();
    let (n_az, n_el, n_f) = scan.s21.dims();
    let expected = [
        ("azimuth", scan.config.grid.n_azimuth(), n_az),
        ("elevation", scan.config.grid.n_elevation(), n_el),
        ("frequency", scan.config.band.n_points(), n_f),
    ];
    for (axis, expected, found) in expected {
        if expected != found {
            violations.push(ScanViolation::DimensionMismatch {
                axis,
                expected,
                found,
            });
        }
    }
    if !(scan.distance_m > 0.0 && scan.distance_m.is_finite()) {
        violations.push(ScanViolation::NonPositiveDistance(scan.distance_m));
    }
    if let Err(e) = scan.config.check() {
        violations.push(e.into());
    }
    for (k, value) in scan.s21.as_slice().iter().enumerate() {
        if !(value.re.is_finite() && value.im.is_finite()) {
            let (i, j, s) = scan.s21.unflatten(k);
            violations.push(ScanViolation::NonFiniteSample {
                azimuth_index: i,
                elevation_index: j,
                freq_index: s,
            });
        }
    }
    if violations.is_empty() {
        Ok(scan)
    } else {
        Err(violations)
    }
}

// ---------------------------------------------------------------------------
// Path-loss samples
// ---------------------------------------------------------------------------

/// One path-loss observation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PathLossSample {
    pub scan_id: String,
    pub scenario: Scenario,
    pub distance_m: f64,
    pub frequency_ghz: f64,
    pub pl_db: f64,
    pub kind: PathLossKind,
}

impl PathLossSample {
    /// Positive finite loss at or beyond the reference distance.
    pub fn is_physical(&self) -> bool {
        self.pl_db.is_finite() && self.pl_db > 0.0 && self.distance_m >= REFERENCE_DISTANCE_M
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small_scan(n_freq_cube: usize) -> DirectionalScan {
        let mut config = SounderConfig::sounder_140();
        config.band = FrequencyBand::new(130e9, 143e9, 4, "140GHz").unwrap();
        config.grid = AngularGrid::uniform(0.0, 3, -10.0, 2, 10.0).unwrap();
        DirectionalScan {
            scan_id: "s".into(),
            config,
            tx_id: "TxA".into(),
            rx_id: "A1".into(),
            distance_m: 4.0,
            scenario: Scenario::MeetingRoom,
            s21: S21Cube::zeros(3, 2, n_freq_cube),
        }
    }

    #[test]
    fn sounder_bands_match_parameter_table() {
        let b = FrequencyBand::sounder_140();
        assert_eq!(b.step_hz(), 10e6);
        assert_eq!(b.span_hz(), 13e9);
        assert!((b.max_excess_delay_s() - 100e-9).abs() < 1e-18);
        assert!((b.max_path_length_m() - 29.9792458).abs() < 1e-9);
        assert!((b.delay_resolution_s() - 76.9e-12).abs() < 0.05e-12);
        let b = FrequencyBand::sounder_220();
        assert_eq!(b.step_hz(), 10e6);
        assert!((b.delay_resolution_s() - 125e-12).abs() < 1e-18);
        assert_eq!(b.nominal_ghz(), 220.0);
    }

    #[test]
    fn band_arithmetic_is_exact_on_sounder_sweeps() {
        for b in [FrequencyBand::sounder_140(), FrequencyBand::sounder_220()] {
            assert_eq!(b.step_hz() * (b.n_points() - 1) as f64, b.span_hz());
            assert_eq!(b.frequency_hz(b.n_points() - 1), b.end_hz());
        }
    }

    #[test]
    fn band_rejects_bad_edges() {
        assert!(matches!(
            FrequencyBand::new(143e9, 130e9, 10, "x"),
            Err(ConfigError::EmptyBand { .. })
        ));
        assert_eq!(
            FrequencyBand::new(130e9, 143e9, 1, "x"),
            Err(ConfigError::TooFewPoints(1))
        );
    }

    #[test]
    fn infer_labels_known_sounders() {
        assert_eq!(FrequencyBand::infer(130e9, 143e9, 1301).unwrap().label(), "140GHz");
        assert_eq!(FrequencyBand::infer(201e9, 209e9, 5).unwrap().label(), "220GHz");
        let custom = FrequencyBand::infer(100e9, 110e9, 3).unwrap();
        assert_eq!(custom.nominal_ghz(), 105.0);
    }

    #[test]
    fn grid_invariants() {
        let g = AngularGrid::sounder();
        assert_eq!(g.len(), 180);
        assert_eq!(g.azimuth_deg()[35], 350.0);
        assert!(AngularGrid::uniform(0.0, 37, 0.0, 1, 10.0).is_err());
        assert!(AngularGrid::new(vec![0.0, 10.0, 25.0], vec![0.0], 10.0).is_err());
        assert!(AngularGrid::new(vec![], vec![0.0], 10.0).is_err());
        assert!(AngularGrid::new(vec![0.0], vec![95.0], 10.0).is_err());
        assert!(AngularGrid::new(vec![0.0], vec![0.0], 0.0).is_err());
    }

    #[test]
    fn config_needs_link_budget() {
        let mut cfg = SounderConfig::sounder_140();
        assert!(cfg.check().is_ok());
        cfg.noise_floor_dbm = 45.0;
        assert!(cfg.check().is_err());
        assert!((SounderConfig::sounder_140().noise_amplitude() - 1e-6).abs() < 1e-18);
    }

    #[test]
    fn well_formed_scan_validates() {
        let scan = small_scan(4);
        let checked = validate_scan(scan.clone()).unwrap();
        assert_eq!(checked, scan);
        assert_eq!(validate_scan(checked.clone()).unwrap(), checked);
    }

    #[test]
    fn full_sounder_scan_validates() {
        let config = SounderConfig::sounder_140();
        let scan = DirectionalScan {
            scan_id: "full".into(),
            s21: S21Cube::zeros(36, 5, 1301),
            config,
            tx_id: "Tx".into(),
            rx_id: "Rx".into(),
            distance_m: 4.0,
            scenario: Scenario::MeetingRoom,
        };
        assert!(validate_scan(scan).is_ok());
    }

    #[test]
    fn nan_sample_reported_at_index() {
        let mut scan = small_scan(4);
        scan.s21.set(2, 1, 3, Complex64::new(f64::NAN, 0.0));
        let errs = validate_scan(scan).unwrap_err();
        assert_eq!(
            errs,
            vec![ScanViolation::NonFiniteSample {
                azimuth_index: 2,
                elevation_index: 1,
                freq_index: 3
            }]
        );
    }

    #[test]
    fn frequency_slice_mismatch() {
        let mut config = SounderConfig::sounder_140();
        config.band = FrequencyBand::new(201e9, 209e9, 801, "220GHz").unwrap();
        let scan = DirectionalScan {
            scan_id: "mm".into(),
            s21: S21Cube::zeros(36, 5, 1301),
            config,
            tx_id: "Tx".into(),
            rx_id: "Rx".into(),
            distance_m: 4.0,
            scenario: Scenario::Hallway,
        };
        let errs = validate_scan(scan).unwrap_err();
        assert_eq!(
            errs,
            vec![ScanViolation::DimensionMismatch {
                axis: "frequency",
                expected: 801,
                found: 1301
            }]
        );
    }

    #[test]
    fn all_violations_collected() {
        let mut scan = small_scan(5);
        scan.distance_m = 0.0;
        scan.s21.set(0, 0, 0, Complex64::new(0.0, f64::INFINITY));
        let errs = validate_scan(scan).unwrap_err();
        assert_eq!(errs.len(), 3);
        assert!(errs.contains(&ScanViolation::NonPositiveDistance(0.0)));
    }

    #[test]
    fn scenario_and_kind_parse() {
        assert_eq!("Meeting room".parse::<Scenario>().unwrap(), Scenario::MeetingRoom);
        assert_eq!("office_area".parse::<Scenario>().unwrap(), Scenario::OfficeArea);
        assert_eq!("NLOS".parse::<Scenario>().unwrap(), Scenario::NLoS);
        assert!("garage".parse::<Scenario>().is_err());
        for kind in [
            PathLossKind::BestDirection,
            PathLossKind::Omni,
            PathLossKind::Coherent(3),
            PathLossKind::NonCoherent(5),
        ] {
            assert_eq!(kind.to_string().parse::<PathLossKind>().unwrap(), kind);
        }
        assert!("coherent:0".parse::<PathLossKind>().is_err());
        assert!("coherent".parse::<PathLossKind>().is_err());
    }

    #[test]
    fn cube_offsets_round_trip() {
        let cube = S21Cube::zeros(3, 2, 4);
        for k in 0..24 {
            let (i, j, s) = cube.unflatten(k);
            assert_eq!(cube.offset(i, j, s), k);
        }
        assert!(S21Cube::new(2, 2, 2, vec![Complex64::new(0.0, 0.0); 7]).is_err());
    }
}
