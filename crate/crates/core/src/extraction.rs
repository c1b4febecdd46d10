//! Path loss from a calibrated directional scan: best direction, omni
//! (power sum over every scanned direction) and top-N beam combination.
//!
//! Each direction is reduced to the mean CTF magnitude over the sweep,
//! `(1/S)·Σ_s |H_{i,j,s}|`. A complex sum across a multi-GHz sweep cancels
//! for any non-zero delay, so magnitudes are averaged instead.

use std::cmp::Ordering;

use thiserror::Error;

use crate::types::{DirectionalScan, FrequencyMode, PathLossKind, PathLossSample, Scenario};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ExtractionError {
    #[error("no received signal: strongest beam magnitude is zero")]
    ZeroSignal,
    #[error("beam count {requested} outside 1..={available}")]
    InvalidBeamCount { requested: usize, available: usize },
    #[error("beam magnitude {0} is negative or not finite")]
    InvalidMagnitude(f64),
}

/// Identity of the placement a beam table was computed from.
#[derive(Debug, Clone, PartialEq)]
pub struct ScanContext {
    pub scan_id: String,
    pub scenario: Scenario,
    pub distance_m: f64,
    pub frequency_ghz: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BeamEntry {
    pub azimuth_deg: f64,
    pub elevation_deg: f64,
    pub avg_magnitude: f64,
}

/// Averaged magnitudes of every scanned direction, strongest first.
#[derive(Debug, Clone, PartialEq)]
pub struct BeamTable {
    pub context: ScanContext,
    entries: Vec<BeamEntry>,
}

fn beam_order(a: &BeamEntry, b: &BeamEntry) -> Ordering {
    b.avg_magnitude
        .total_cmp(&a.avg_magnitude)
        .then(a.azimuth_deg.total_cmp(&b.azimuth_deg))
        .then(a.elevation_deg.total_cmp(&b.elevation_deg))
}

impl BeamTable {
    /// Sorts `entries` descending by magnitude, ties by (azimuth, elevation).
    pub fn new(context: ScanContext, mut entries: Vec<BeamEntry>) -> Result<Self, ExtractionError> {
        if let Some(bad) = entries
            .iter()
            .find(|e| !(e.avg_magnitude.is_finite() && e.avg_magnitude >= 0.0))
        {
            return Err(ExtractionError::InvalidMagnitude(bad.avg_magnitude));
        }
        entries.sort_by(beam_order);
        Ok(Self { context, entries })
    }

    pub fn entries(&self) -> &[BeamEntry] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Zeroes every direction whose averaged magnitude is below `threshold`.
    pub fn noise_gated(&self, threshold: f64) -> BeamTable {
        let entries = self
            .entries
            .iter()
            .map(|e| BeamEntry {
                avg_magnitude: if e.avg_magnitude < threshold { 0.0 } else { e.avg_magnitude },
                ..*e
            })
            .collect::<Vec<_>>();
        BeamTable::new(self.context.clone(), entries).expect("gating keeps magnitudes valid")
    }

    fn check_count(&self, n: usize) -> Result<(), ExtractionError> {
        if n == 0 || n > self.entries.len() {
            return Err(ExtractionError::InvalidBeamCount {
                requested: n,
                available: self.entries.len(),
            });
        }
        Ok(())
    }

    fn sample(&self, kind: PathLossKind, pl_db: f64) -> PathLossSample {
        PathLossSample {
            scan_id: self.context.scan_id.clone(),
            scenario: self.context.scenario,
            distance_m: self.context.distance_m,
            frequency_ghz: self.context.frequency_ghz,
            pl_db,
            kind,
        }
    }
}

/// Mean |H| over the sweep for every direction of `scan`.
pub fn beam_average(scan: &DirectionalScan, frequency_mode: FrequencyMode) -> BeamTable {
    let grid = &scan.config.grid;
    let (n_az, n_el, n_f) = scan.s21.dims();
    let mut entries = Vec::with_capacity(n_az * n_el);
    for i in 0..n_az {
        for j in 0..n_el {
            let sum: f64 = scan.s21.response(i, j).iter().map(|h| h.norm()).sum();
            let (azimuth_deg, elevation_deg) = grid.direction(i, j);
            entries.push(BeamEntry {
                azimuth_deg,
                elevation_deg,
                avg_magnitude: sum / n_f as f64,
            });
        }
    }
    let context = ScanContext {
        scan_id: scan.scan_id.clone(),
        scenario: scan.scenario,
        distance_m: scan.distance_m,
        frequency_ghz: frequency_mode.frequency_ghz(&scan.config.band),
    };
    BeamTable::new(context, entries).expect("magnitudes of a validated scan are finite")
}

/// `-20·log10(max |H_avg|)`.
pub fn best_direction_pl(table: &BeamTable) -> Result<PathLossSample, ExtractionError> {
    let top = table.entries.first().map_or(0.0, |e| e.avg_magnitude);
    if top <= 0.0 {
        return Err(ExtractionError::ZeroSignal);
    }
    Ok(table.sample(PathLossKind::BestDirection, -20.0 * top.log10()))
}

/// `-20·log10(Σ_{k≤n} H_k)`: amplitudes of the n strongest beams add.
pub fn combine_coherent(table: &BeamTable, n: usize) -> Result<PathLossSample, ExtractionError> {
    table.check_count(n)?;
    let sum: f64 = table.entries[..n].iter().map(|e| e.avg_magnitude).sum();
    if sum <= 0.0 {
        return Err(ExtractionError::ZeroSignal);
    }
    Ok(table.sample(PathLossKind::Coherent(n), -20.0 * sum.log10()))
}

// Evaluated as -20·log10(sqrt(Σ H_k²)), which equals -10·log10(Σ H_k²) and
// keeps n = 1 bit-identical to the best-direction value.
fn power_sum_pl(table: &BeamTable, n: usize) -> Result<f64, ExtractionError> {
    let power: f64 = table.entries[..n]
        .iter()
        .map(|e| e.avg_magnitude * e.avg_magnitude)
        .sum();
    if power <= 0.0 {
        return Err(ExtractionError::ZeroSignal);
    }
    Ok(-20.0 * power.sqrt().log10())
}

/// `-10·log10(Σ_{k≤n} H_k²)`: powers of the n strongest beams add.
pub fn combine_noncoherent(table: &BeamTable, n: usize) -> Result<PathLossSample, ExtractionError> {
    table.check_count(n)?;
    let pl = power_sum_pl(table, n)?;
    Ok(table.sample(PathLossKind::NonCoherent(n), pl))
}

/// `-10·log10(Σ_{i,j} H_avg²)` over every scanned direction.
pub fn omni_pl(table: &BeamTable) -> Result<PathLossSample, ExtractionError> {
    if table.is_empty() {
        return Err(ExtractionError::ZeroSignal);
    }
    let pl = power_sum_pl(table, table.len())?;
    Ok(table.sample(PathLossKind::Omni, pl))
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExtractOptions {
    /// Zero directions below the sounder noise floor before summing.
    pub noise_gate: bool,
    /// Largest N for coherent / non-coherent combination (clamped to the grid size).
    pub max_beams: usize,
    pub frequency_mode: FrequencyMode,
}

impl Default for ExtractOptions {
    fn default() -> Self {
        Self {
            noise_gate: false,
            max_beams: 5,
            frequency_mode: FrequencyMode::Nominal,
        }
    }
}

/// Every path-loss kind for one scan: best, omni, then coherent and
/// non-coherent for N = 1..=max_beams.
pub fn extract_samples(
    scan: &DirectionalScan,
    options: &ExtractOptions,
) -> Result<Vec<PathLossSample>, ExtractionError> {
    let mut table = beam_average(scan, options.frequency_mode);
    if options.noise_gate {
        table = table.noise_gated(scan.config.noise_amplitude());
    }
    let mut out = vec![best_direction_pl(&table)?, omni_pl(&table)?];
    let max_n = options.max_beams.min(table.len());
    for n in 1..=max_n {
        out.push(combine_coherent(&table, n)?);
    }
    for n in 1..=max_n {
        out.push(combine_noncoherent(&table, n)?);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::types::{AngularGrid, FrequencyBand, S21Cube, SounderConfig};
    use num_complex::Complex64;
    use proptest::prelude::*;

    fn ctx() -> ScanContext {
        ScanContext {
            scan_id: "t".into(),
            scenario: Scenario::NLoS,
            distance_m: 5.0,
            frequency_ghz: 140.0,
        }
    }

    fn table(mags: &[f64]) -> BeamTable {
        let entries = mags
            .iter()
            .enumerate()
            .map(|(k, &m)| BeamEntry {
                azimuth_deg: 10.0 * k as f64,
                elevation_deg: 0.0,
                avg_magnitude: m,
            })
            .collect();
        BeamTable::new(ctx(), entries).unwrap()
    }

    fn scan_with(n_az: usize, n_f: usize, fill: impl Fn(usize, usize) -> Complex64) -> DirectionalScan {
        let mut config = SounderConfig::sounder_140();
        config.band = FrequencyBand::new(130e9, 143e9, n_f, "140GHz").unwrap();
        config.grid = AngularGrid::uniform(0.0, n_az, 0.0, 1, 10.0).unwrap();
        let mut s21 = S21Cube::zeros(n_az, 1, n_f);
        for i in 0..n_az {
            for s in 0..n_f {
                s21.set(i, 0, s, fill(i, s));
            }
        }
        DirectionalScan {
            scan_id: "x".into(),
            config,
            tx_id: "Tx".into(),
            rx_id: "Rx".into(),
            distance_m: 3.0,
            scenario: Scenario::MeetingRoom,
            s21,
        }
    }

    #[test]
    fn single_path_ranks_first() {
        let scan = scan_with(4, 3, |i, s| {
            if i == 2 {
                Complex64::from_polar(0.01, s as f64)
            } else {
                Complex64::new(0.0, 0.0)
            }
        });
        let t = beam_average(&scan, FrequencyMode::Nominal);
        assert_eq!(t.entries()[0].azimuth_deg, 20.0);
        assert!((t.entries()[0].avg_magnitude - 0.01).abs() < 1e-15);
        assert!(t.entries()[1..].iter().all(|e| e.avg_magnitude == 0.0));
        // zero-magnitude ties fall back to azimuth order
        let az: Vec<_> = t.entries()[1..].iter().map(|e| e.azimuth_deg).collect();
        assert_eq!(az, vec![0.0, 10.0, 30.0]);
    }

    #[test]
    fn stronger_direction_first() {
        let scan = scan_with(2, 5, |i, _| Complex64::new(if i == 1 { 0.02 } else { 0.01 }, 0.0));
        let t = beam_average(&scan, FrequencyMode::Nominal);
        assert_eq!(t.entries()[0].azimuth_deg, 10.0);
        assert_eq!(t.entries()[1].azimuth_deg, 0.0);
    }

    #[test]
    fn magnitude_average_over_alternating_taps() {
        // |H| alternates 0.01, 0.03 over S = 4: (0.01+0.03+0.01+0.03)/4 = 0.02
        let scan = scan_with(1, 4, |_, s| {
            let m = if s % 2 == 0 { 0.01 } else { 0.03 };
            Complex64::from_polar(m, 1.3 * s as f64)
        });
        let t = beam_average(&scan, FrequencyMode::Nominal);
        assert!((t.entries()[0].avg_magnitude - 0.02).abs() < 1e-15);
    }

    #[test]
    fn best_direction_values() {
        assert!((best_direction_pl(&table(&[0.001])).unwrap().pl_db - 60.0).abs() < 1e-12);
        assert_eq!(best_direction_pl(&table(&[1.0])).unwrap().pl_db, 0.0);
        assert_eq!(
            best_direction_pl(&table(&[0.0, 0.0])),
            Err(ExtractionError::ZeroSignal)
        );
    }

    #[test]
    fn omni_values() {
        let one = table(&[0.004, 0.0, 0.0]);
        assert_eq!(omni_pl(&one).unwrap().pl_db, best_direction_pl(&one).unwrap().pl_db);
        let two = table(&[0.004, 0.004]);
        let diff = best_direction_pl(&two).unwrap().pl_db - omni_pl(&two).unwrap().pl_db;
        assert!((diff - 10.0 * 2f64.log10()).abs() < 1e-12);
        // five directions: brute-force power sum
        let mags = [0.003, 0.001, 0.0007, 0.0004, 0.0002];
        let power: f64 = mags.iter().map(|m| m * m).sum();
        assert!((omni_pl(&table(&mags)).unwrap().pl_db + 10.0 * power.log10()).abs() < 1e-9);
    }

    #[test]
    fn coherent_values() {
        let t = table(&[0.03, 0.01]);
        assert_eq!(
            combine_coherent(&t, 1).unwrap().pl_db,
            best_direction_pl(&t).unwrap().pl_db
        );
        assert!((combine_coherent(&t, 2).unwrap().pl_db - (-20.0 * 0.04f64.log10())).abs() < 1e-12);
        assert!((combine_coherent(&t, 2).unwrap().pl_db - 27.96).abs() < 0.005);
        let eq = table(&[0.005, 0.005]);
        let diff = best_direction_pl(&eq).unwrap().pl_db - combine_coherent(&eq, 2).unwrap().pl_db;
        assert!((diff - 20.0 * 2f64.log10()).abs() < 1e-12);
        assert!(matches!(
            combine_coherent(&t, 3),
            Err(ExtractionError::InvalidBeamCount { .. })
        ));
        assert!(combine_coherent(&t, 0).is_err());
    }

    #[test]
    fn noncoherent_values() {
        let t = table(&[0.03, 0.01]);
        assert_eq!(
            combine_noncoherent(&t, 1).unwrap().pl_db,
            best_direction_pl(&t).unwrap().pl_db
        );
        assert!((combine_noncoherent(&t, 2).unwrap().pl_db - 30.0).abs() < 1e-12);
        assert_eq!(
            combine_noncoherent(&t, 2).unwrap().pl_db,
            omni_pl(&t).unwrap().pl_db
        );
        assert_eq!(combine_noncoherent(&t, 2).unwrap().kind, PathLossKind::NonCoherent(2));
    }

    #[test]
    fn noise_gate_zeroes_weak_beams() {
        let t = table(&[1e-3, 5e-7, 2e-7]).noise_gated(1e-6);
        assert_eq!(omni_pl(&t).unwrap().pl_db, best_direction_pl(&t).unwrap().pl_db);
        assert_eq!(t.len(), 3);
    }

    #[test]
    fn extract_emits_all_kinds() {
        let scan = scan_with(6, 3, |i, _| Complex64::new(1e-3 / (1 + i) as f64, 0.0));
        let out = extract_samples(&scan, &ExtractOptions::default()).unwrap();
        assert_eq!(out.len(), 2 + 5 + 5);
        assert_eq!(out[0].kind, PathLossKind::BestDirection);
        assert_eq!(out[1].kind, PathLossKind::Omni);
        assert_eq!(out[2].kind, PathLossKind::Coherent(1));
        assert_eq!(out[11].kind, PathLossKind::NonCoherent(5));
        assert!(out.iter().all(|s| s.frequency_ghz == 140.0 && s.distance_m == 3.0));
        let centre = extract_samples(
            &scan,
            &ExtractOptions {
                frequency_mode: FrequencyMode::Center,
                ..Default::default()
            },
        )
        .unwrap();
        assert_eq!(centre[0].frequency_ghz, 136.5);
    }

    proptest! {
        #[test]
        fn ordering_and_monotonicity(mags in proptest::collection::vec(0.0f64..1e-2, 1..30)) {
            prop_assume!(mags.iter().any(|&m| m > 0.0));
            let t = table(&mags);
            let best = best_direction_pl(&t).unwrap().pl_db;
            let mut prev = (f64::INFINITY, f64::INFINITY);
            for n in 1..=t.len() {
                let coh = combine_coherent(&t, n).unwrap().pl_db;
                let non = combine_noncoherent(&t, n).unwrap().pl_db;
                prop_assert!(coh <= non && non <= best);
                let top = t.entries()[0].avg_magnitude;
                let nonzero = t.entries()[..n].iter().filter(|e| e.avg_magnitude > 0.0).count();
                if nonzero <= 1 {
                    prop_assert_eq!(coh, non);
                } else if t.entries()[1].avg_magnitude > 1e-6 * top {
                    // strict below this ratio; beyond it the gap is under f64 resolution
                    prop_assert!(coh < non);
                }
                prop_assert!(coh <= prev.0 && non <= prev.1);
                prev = (coh, non);
            }
            prop_assert_eq!(combine_noncoherent(&t, t.len()).unwrap().pl_db, omni_pl(&t).unwrap().pl_db);
        }

        #[test]
        fn permuting_directions_keeps_values(
            mags in proptest::collection::vec(1e-6f64..1e-2, 2..20),
            seed in any::<u64>(),
        ) {
            let scan = scan_with(mags.len(), 2, |i, _| Complex64::new(mags[i], 0.0));
            let mut perm: Vec<usize> = (0..mags.len()).collect();
            let mut state = seed;
            for k in (1..perm.len()).rev() {
                state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
                perm.swap(k, (state >> 33) as usize % (k + 1));
            }
            let shuffled = scan_with(mags.len(), 2, |i, _| Complex64::new(mags[perm[i]], 0.0));
            let opts = ExtractOptions::default();
            let a: Vec<f64> = extract_samples(&scan, &opts).unwrap().iter().map(|s| s.pl_db).collect();
            let b: Vec<f64> = extract_samples(&shuffled, &opts).unwrap().iter().map(|s| s.pl_db).collect();
            prop_assert_eq!(a, b);
        }
    }
}
