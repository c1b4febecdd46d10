//! Line-oriented sweep CSV: one row per (direction, frequency) sample.
//!
//! ```text
//! #schema=thzpl-sweep/1
//! scan_id,scenario,tx_id,rx_id,distance_m,azimuth_deg,elevation_deg,freq_hz,s21_re,s21_im
//! ```
//!
//! The schema line is optional on input and always written. Calibration
//! records share the format: their `scan_id` is `CAL:<name>` and `tx_id`
//! names the vector (`s_calibration` or `h_attenuator`); the angle and
//! distance columns are ignored. Floats are written in shortest
//! round-trip form, so a scan survives write → read bit-exactly.

use std::collections::HashMap;
use std::io::{BufRead, Read, Write};

use num_complex::Complex64;
use thiserror::Error;

use crate::calibration::{CalibrationError, CalibrationRecord};
use crate::types::{
    validate_scan, AngularGrid, ConfigError, DirectionalScan, FrequencyBand, S21Cube, Scenario,
    ScanViolation, SounderConfig,
};

pub const SCHEMA_VERSION: &str = "thzpl-sweep/1";
pub const HEADER: [&str; 10] = [
    "scan_id",
    "scenario",
    "tx_id",
    "rx_id",
    "distance_m",
    "azimuth_deg",
    "elevation_deg",
    "freq_hz",
    "s21_re",
    "s21_im",
];
pub const CAL_PREFIX: &str = "CAL:";
pub const CAL_MEASURED: &str = "s_calibration";
pub const CAL_ATTENUATOR: &str = "h_attenuator";

const LATTICE_TOL: f64 = 1e-6;

#[derive(Debug, Error)]
pub enum SweepError {
    #[error("line {line}: {message}")]
    Parse { line: u64, message: String },
    #[error("schema version '{found}' is not {SCHEMA_VERSION}")]
    SchemaVersion { found: String },
    #[error("scan {scan_id} failed validation: {}", join(violations))]
    Invalid {
        scan_id: String,
        violations: Vec<ScanViolation>,
    },
    #[error("calibration {name}: {source}")]
    Calibration {
        name: String,
        source: CalibrationError,
    },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

fn join(v: &[ScanViolation]) -> String {
    v.iter().map(|e| e.to_string()).collect::<Vec<_>>().join("; ")
}

fn parse_err(line: u64, message: impl Into<String>) -> SweepError {
    SweepError::Parse {
        line,
        message: message.into(),
    }
}

/// Everything read from one or more sweep files.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct SweepFile {
    pub scans: Vec<DirectionalScan>,
    pub calibrations: Vec<CalibrationRecord>,
}

struct Row {
    line: u64,
    azimuth_deg: f64,
    elevation_deg: f64,
    freq_hz: f64,
    value: Complex64,
}

/// Placement metadata, fixed across the rows of one scan.
struct Group {
    line: u64,
    scenario: String,
    tx_id: String,
    rx_id: String,
    distance_m: f64,
    rows: Vec<Row>,
    /// Per-row record type (`tx_id`) of calibration groups.
    record_types: Vec<String>,
}

/// Reads a sweep file. Sounder parameters other than the band and grid
/// (gains, power, noise floor, HPBW) come from `base`, or from the sounder
/// matching the band when `base` is `None`.
pub fn read_sweep<R: Read>(reader: R, base: Option<&SounderConfig>) -> Result<SweepFile, SweepError> {
    let mut buffered = std::io::BufReader::new(reader);
    let mut first = String::new();
    buffered.read_line(&mut first)?;
    let mut line_offset = 0;
    let mut prefix = first.clone();
    if let Some(version) = first.trim_end().strip_prefix("#schema=") {
        if version != SCHEMA_VERSION {
            return Err(SweepError::SchemaVersion {
                found: version.to_string(),
            });
        }
        line_offset = 1;
        prefix.clear();
    }
    let chained = std::io::Cursor::new(prefix.into_bytes()).chain(buffered);
    let mut csv = csv::ReaderBuilder::new()
        .has_headers(false)
        .trim(csv::Trim::All)
        .from_reader(chained);

    let mut records = csv.records();
    let header = match records.next() {
        Some(r) => r.map_err(|e| parse_err(1 + line_offset, e.to_string()))?,
        None => return Err(parse_err(1 + line_offset, "missing header row")),
    };
    if header.iter().collect::<Vec<_>>() != HEADER {
        return Err(parse_err(
            1 + line_offset,
            format!("header must be '{}'", HEADER.join(",")),
        ));
    }

    let mut order: Vec<String> = Vec::new();
    let mut groups: HashMap<String, Group> = HashMap::new();
    for rec in records {
        let rec = rec.map_err(|e| {
            let line = e.position().map_or(0, |p| p.line()) + line_offset;
            parse_err(line, e.to_string())
        })?;
        let line = rec.position().map_or(0, |p| p.line()) + line_offset;
        if rec.len() != HEADER.len() {
            return Err(parse_err(line, format!("expected {} fields, got {}", HEADER.len(), rec.len())));
        }
        let num = |k: usize| -> Result<f64, SweepError> {
            rec[k]
                .parse::<f64>()
                .map_err(|_| parse_err(line, format!("{} '{}' is not a number", HEADER[k], &rec[k])))
        };
        let row = Row {
            line,
            azimuth_deg: num(5)?,
            elevation_deg: num(6)?,
            freq_hz: num(7)?,
            value: Complex64::new(num(8)?, num(9)?),
        };
        let distance_m = num(4)?;
        let id = &rec[0];
        if id.is_empty() {
            return Err(parse_err(line, "empty scan_id"));
        }
        let is_cal = id.starts_with(CAL_PREFIX);
        match groups.get_mut(id) {
            Some(g) => {
                if is_cal {
                    g.record_types.push(rec[2].to_string());
                } else if g.scenario != rec[1] || g.tx_id != rec[2] || g.rx_id != rec[3] || g.distance_m != distance_m {
                    return Err(parse_err(line, format!("placement metadata changes within scan {id}")));
                }
                g.rows.push(row);
            }
            None => {
                order.push(id.to_string());
                groups.insert(
                    id.to_string(),
                    Group {
                        line,
                        scenario: rec[1].to_string(),
                        tx_id: rec[2].to_string(),
                        rx_id: rec[3].to_string(),
                        distance_m,
                        rows: vec![row],
                        record_types: if is_cal { vec![rec[2].to_string()] } else { Vec::new() },
                    },
                );
            }
        }
    }

    let mut out = SweepFile::default();
    for id in order {
        let group = groups.remove(&id).expect("grouped");
        if let Some(name) = id.strip_prefix(CAL_PREFIX) {
            out.calibrations.push(build_calibration(name, &group)?);
        } else {
            out.scans.push(build_scan(&id, &group, base)?);
        }
    }
    Ok(out)
}

fn distinct_sorted(values: impl Iterator<Item = f64>) -> Vec<f64> {
    let mut v: Vec<f64> = values.collect();
    v.sort_by(f64::total_cmp);
    v.dedup_by(|a, b| (*a - *b).abs() <= LATTICE_TOL);
    v
}

/// Most common spacing between consecutive distinct values.
fn dominant_step(axes: &[&[f64]]) -> Option<f64> {
    let mut counts: Vec<(f64, usize)> = Vec::new();
    for axis in axes {
        for pair in axis.windows(2) {
            let d = pair[1] - pair[0];
            match counts.iter_mut().find(|(s, _)| (s - d).abs() <= LATTICE_TOL) {
                Some((_, n)) => *n += 1,
                None => counts.push((d, 1)),
            }
        }
    }
    counts
        .into_iter()
        .max_by(|a, b| a.1.cmp(&b.1).then(b.0.total_cmp(&a.0)))
        .map(|(s, _)| s)
}

fn lattice_index(value: f64, origin: f64, step: f64) -> Option<usize> {
    let k = (value - origin) / step;
    let r = k.round();
    ((k - r).abs() * step <= LATTICE_TOL && r >= 0.0).then_some(r as usize)
}

fn config_err(line: u64, e: ConfigError) -> SweepError {
    parse_err(line, e.to_string())
}

fn build_band(rows: &[Row]) -> Result<FrequencyBand, SweepError> {
    let freqs = distinct_sorted(rows.iter().map(|r| r.freq_hz));
    let line = rows[0].line;
    let (first, last) = (freqs[0], *freqs.last().expect("non-empty"));
    FrequencyBand::infer(first, last, freqs.len()).map_err(|e| config_err(line, e))
}

fn freq_index(band: &FrequencyBand, row: &Row) -> Result<usize, SweepError> {
    let step = band.step_hz();
    let k = ((row.freq_hz - band.start_hz()) / step).round();
    if k < 0.0 || k as usize >= band.n_points() {
        return Err(parse_err(row.line, format!("frequency {} Hz outside the sweep", row.freq_hz)));
    }
    let s = k as usize;
    if (band.frequency_hz(s) - row.freq_hz).abs() > 1e-6 * step {
        return Err(parse_err(
            row.line,
            format!("frequency {} Hz is not on the uniform sweep", row.freq_hz),
        ));
    }
    Ok(s)
}

fn build_scan(id: &str, group: &Group, base: Option<&SounderConfig>) -> Result<DirectionalScan, SweepError> {
    let rows = &group.rows;
    let scenario: Scenario = group
        .scenario
        .parse()
        .map_err(|e: crate::types::UnknownName| parse_err(group.line, e.to_string()))?;

    let az = distinct_sorted(rows.iter().map(|r| r.azimuth_deg));
    let el = distinct_sorted(rows.iter().map(|r| r.elevation_deg));
    let step = dominant_step(&[&az, &el]).or_else(|| base.map(|b| b.grid.step_deg())).unwrap_or(10.0);
    let (az0, el0) = (az[0], el[0]);
    let mut idx = Vec::with_capacity(rows.len());
    for r in rows {
        let i = lattice_index(r.azimuth_deg, az0, step)
            .ok_or_else(|| parse_err(r.line, format!("off-grid azimuth {} deg (step {step} deg)", r.azimuth_deg)))?;
        let j = lattice_index(r.elevation_deg, el0, step)
            .ok_or_else(|| parse_err(r.line, format!("off-grid elevation {} deg (step {step} deg)", r.elevation_deg)))?;
        idx.push((i, j));
    }
    let n_az = idx.iter().map(|p| p.0).max().unwrap_or(0) + 1;
    let n_el = idx.iter().map(|p| p.1).max().unwrap_or(0) + 1;
    let grid = AngularGrid::uniform(az0, n_az, el0, n_el, step).map_err(|e| config_err(group.line, e))?;
    let band = build_band(rows)?;

    let n_f = band.n_points();
    let mut cube = S21Cube::zeros(n_az, n_el, n_f);
    let mut seen = vec![false; n_az * n_el * n_f];
    for (r, &(i, j)) in rows.iter().zip(&idx) {
        let s = freq_index(&band, r)?;
        let k = (i * n_el + j) * n_f + s;
        if std::mem::replace(&mut seen[k], true) {
            return Err(parse_err(r.line, "duplicate sample"));
        }
        cube.set(i, j, s, r.value);
    }
    if let Some(k) = seen.iter().position(|x| !x) {
        let (i, j, s) = cube.unflatten(k);
        return Err(parse_err(
            rows.last().map_or(0, |r| r.line),
            format!(
                "scan {id} is missing azimuth {} elevation {} frequency {}",
                grid.azimuth_deg()[i],
                grid.elevation_deg()[j],
                band.frequency_hz(s)
            ),
        ));
    }

    let config = match base {
        Some(b) => SounderConfig {
            band,
            grid,
            ..b.clone()
        },
        None => SounderConfig::for_band(band, grid),
    };
    let scan = DirectionalScan {
        scan_id: id.to_string(),
        config,
        tx_id: group.tx_id.clone(),
        rx_id: group.rx_id.clone(),
        distance_m: group.distance_m,
        scenario,
        s21: cube,
    };
    validate_scan(scan).map_err(|violations| SweepError::Invalid {
        scan_id: id.to_string(),
        violations,
    })
}

fn build_calibration(name: &str, group: &Group) -> Result<CalibrationRecord, SweepError> {
    let rows = &group.rows;
    let band = build_band(rows)?;
    let n = band.n_points();
    let mut vectors: [Vec<Option<Complex64>>; 2] = [vec![None; n], vec![None; n]];
    for (r, record_type) in rows.iter().zip(&group.record_types) {
        let which = match record_type.as_str() {
            CAL_MEASURED => 0,
            CAL_ATTENUATOR => 1,
            other => {
                return Err(parse_err(
                    r.line,
                    format!("calibration record type '{other}' must be {CAL_MEASURED} or {CAL_ATTENUATOR}"),
                ))
            }
        };
        let s = freq_index(&band, r)?;
        if vectors[which][s].replace(r.value).is_some() {
            return Err(parse_err(r.line, "duplicate calibration sample"));
        }
    }
    let last = rows.last().map_or(0, |r| r.line);
    let [meas, att] = vectors.map(|v| v.into_iter().collect::<Option<Vec<_>>>());
    let (meas, att) = match (meas, att) {
        (Some(m), Some(a)) => (m, a),
        _ => return Err(parse_err(last, format!("calibration {name} does not cover every frequency"))),
    };
    CalibrationRecord::new(name, band, meas, att).map_err(|source| SweepError::Calibration {
        name: name.to_string(),
        source,
    })
}

/// Writes the schema line and header.
pub fn write_header<W: Write>(w: &mut W) -> std::io::Result<()> {
    writeln!(w, "#schema={SCHEMA_VERSION}")?;
    writeln!(w, "{}", HEADER.join(","))
}

fn field(s: &str) -> String {
    if s.contains([',', '"', '\n', '\r']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

/// Appends every sample of `scan` (no header).
pub fn write_scan<W: Write>(w: &mut W, scan: &DirectionalScan) -> std::io::Result<()> {
    let grid = &scan.config.grid;
    let band = &scan.config.band;
    let prefix = format!(
        "{},{},{},{},{}",
        field(&scan.scan_id),
        field(scan.scenario.name()),
        field(&scan.tx_id),
        field(&scan.rx_id),
        scan.distance_m
    );
    let (n_az, n_el, n_f) = scan.s21.dims();
    for i in 0..n_az {
        for j in 0..n_el {
            let (az, el) = grid.direction(i, j);
            for (s, h) in scan.s21.response(i, j).iter().enumerate().take(n_f) {
                writeln!(w, "{prefix},{az},{el},{},{},{}", band.frequency_hz(s), h.re, h.im)?;
            }
        }
    }
    Ok(())
}

/// Appends a calibration record as `CAL:<name>` rows (no header).
pub fn write_calibration<W: Write>(w: &mut W, cal: &CalibrationRecord) -> std::io::Result<()> {
    let id = field(&format!("{CAL_PREFIX}{}", cal.name));
    let band = cal.band();
    for (kind, values) in [(CAL_MEASURED, cal.s_calibration()), (CAL_ATTENUATOR, cal.h_attenuator())] {
        for (s, h) in values.iter().enumerate() {
            writeln!(w, "{id},,{kind},,0,0,0,{},{},{}", band.frequency_hz(s), h.re, h.im)?;
        }
    }
    Ok(())
}

/// A complete file: header, scans, then calibration records.
pub fn write_sweep<W: Write>(
    w: &mut W,
    scans: &[DirectionalScan],
    calibrations: &[CalibrationRecord],
) -> std::io::Result<()> {
    write_header(w)?;
    for scan in scans {
        write_scan(w, scan)?;
    }
    for cal in calibrations {
        write_calibration(w, cal)?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn scan(n_az: usize, n_el: usize, n_f: usize, seed: f64) -> DirectionalScan {
        let mut config = SounderConfig::sounder_140();
        config.band = FrequencyBand::new(130e9, 143e9, n_f, "140GHz").unwrap();
        config.grid = AngularGrid::uniform(0.0, n_az, -10.0, n_el, 10.0).unwrap();
        let data = (0..n_az * n_el * n_f)
            .map(|k| Complex64::new(seed * (k as f64 + 1.0).sqrt() * 1e-5, -seed / (k as f64 + 3.0)))
            .collect();
        DirectionalScan {
            scan_id: format!("scan-{seed}"),
            config,
            tx_id: "TxB".into(),
            rx_id: "B7".into(),
            distance_m: 6.25,
            scenario: Scenario::OfficeArea,
            s21: S21Cube::new(n_az, n_el, n_f, data).unwrap(),
        }
    }

    fn to_string(scans: &[DirectionalScan], cals: &[CalibrationRecord]) -> String {
        let mut buf = Vec::new();
        write_sweep(&mut buf, scans, cals).unwrap();
        String::from_utf8(buf).unwrap()
    }

    #[test]
    fn round_trip_scans_and_calibration() {
        let a = scan(3, 2, 5, 1.0);
        let b = scan(3, 2, 5, 2.5);
        let cal = CalibrationRecord::new(
            "b2b",
            a.config.band.clone(),
            (0..5).map(|s| Complex64::new(0.1 + s as f64, 0.2)).collect(),
            vec![Complex64::new(0.01, 0.0); 5],
        )
        .unwrap();
        let text = to_string(&[a.clone(), b.clone()], std::slice::from_ref(&cal));
        let back = read_sweep(text.as_bytes(), None).unwrap();
        assert_eq!(back.scans, vec![a, b]);
        assert_eq!(back.calibrations, vec![cal]);
    }

    #[test]
    fn schema_line_optional_but_checked() {
        let text = to_string(&[scan(2, 1, 3, 1.0)], &[]);
        let without = text.split_once('\n').unwrap().1;
        assert_eq!(read_sweep(without.as_bytes(), None).unwrap().scans.len(), 1);
        let wrong = text.replace("thzpl-sweep/1", "thzpl-sweep/2");
        assert!(matches!(read_sweep(wrong.as_bytes(), None), Err(SweepError::SchemaVersion { .. })));
    }

    #[test]
    fn off_grid_azimuth_reports_line() {
        let s = scan(36, 1, 2, 1.0);
        let mut text = to_string(&[s], &[]);
        // one extra direction at 355° (two frequency rows), appended after line 74
        text.push_str("scan-1,Office area,TxB,B7,6.25,355,-10,130000000000,1e-5,0\n");
        text.push_str("scan-1,Office area,TxB,B7,6.25,355,-10,143000000000,1e-5,0\n");
        match read_sweep(text.as_bytes(), None) {
            Err(SweepError::Parse { line, message }) => {
                assert_eq!(line, 75);
                assert!(message.contains("off-grid azimuth 355"), "{message}");
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn bad_number_reports_line() {
        let mut text = to_string(&[scan(2, 1, 2, 1.0)], &[]);
        text.push_str("scan-1,Office area,TxB,B7,6.25,0,-10,abc,0,0\n");
        match read_sweep(text.as_bytes(), None) {
            Err(SweepError::Parse { line, .. }) => assert_eq!(line, 7),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn missing_and_duplicate_samples() {
        let text = to_string(&[scan(2, 1, 3, 1.0)], &[]);
        let mut lines: Vec<&str> = text.lines().collect();
        let dup = lines[3];
        lines.push(dup);
        let dup_text = lines.join("\n") + "\n";
        assert!(matches!(read_sweep(dup_text.as_bytes(), None), Err(SweepError::Parse { .. })));
        let mut lines: Vec<&str> = text.lines().collect();
        lines.remove(4);
        let gap = lines.join("\n") + "\n";
        let err = read_sweep(gap.as_bytes(), None).unwrap_err().to_string();
        assert!(err.contains("missing"), "{err}");
    }

    #[test]
    fn header_and_nan_rejected() {
        assert!(matches!(
            read_sweep("a,b,c\n".as_bytes(), None),
            Err(SweepError::Parse { line: 1, .. })
        ));
        let text = to_string(&[scan(2, 1, 2, 1.0)], &[]).replacen(",1e-5,", ",NaN,", 1);
        let s = scan(2, 1, 2, 1.0);
        let mut buf = Vec::new();
        let mut bad = s.clone();
        bad.s21.set(1, 0, 1, Complex64::new(f64::NAN, 0.0));
        write_sweep(&mut buf, &[bad], &[]).unwrap();
        assert!(matches!(read_sweep(&buf[..], None), Err(SweepError::Invalid { .. })));
        drop(text);
    }

    #[test]
    fn calibration_row_type_checked() {
        let mut text = to_string(&[], &[]);
        text.push_str("CAL:x,,bogus,,0,0,0,130000000000,1,0\n");
        assert!(matches!(read_sweep(text.as_bytes(), None), Err(SweepError::Parse { .. })));
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(32))]
        #[test]
        fn arbitrary_values_round_trip(values in proptest::collection::vec((-1e3f64..1e3, -1e-9f64..1e-9), 6)) {
            let mut s = scan(3, 1, 2, 1.0);
            for (k, (re, im)) in values.iter().enumerate() {
                let (i, j, f) = s.s21.unflatten(k);
                s.s21.set(i, j, f, Complex64::new(*re, *im));
            }
            let back = read_sweep(to_string(&[s.clone()], &[]).as_bytes(), None).unwrap();
            prop_assert_eq!(&back.scans[0], &s);
        }
    }
}
