//! Track files.
//!
//! ```text
//! format_version,mmwf-track-1
//! step_m,0.00535
//! wavelength_m,0.010706873499999999
//! bin_width_s,2.5e-9
//! noise_floor_dbm,-100.0
//! n_positions,66
//! n_bins,70
//! environment,LOS
//! polarization,VV
//! seed,12345
//! data
//! 0,-70.512345,NF,...
//! ```
//!
//! Unknown labels are written as `-`. Powers are dBm with six decimals;
//! `NF` marks entries at or below the noise floor.

use std::path::Path;

use super::{fmt_f64, read_text, write_text};
use crate::channel::{dbm_to_mw, mw_to_dbm, SpatialTrackPdp, TrackGeometry, TrackLabels};
use crate::error::PersistenceError;

pub const TRACK_FORMAT_VERSION: &str = "mmwf-track-1";

const HEADER_KEYS: [&str; 10] = [
    "format_version",
    "step_m",
    "wavelength_m",
    "bin_width_s",
    "noise_floor_dbm",
    "n_positions",
    "n_bins",
    "environment",
    "polarization",
    "seed",
];

const NOISE_TOKEN: &str = "NF";
const UNSET: &str = "-";

fn format_dbm(mw: f64) -> String {
    format!("{:.6}", mw_to_dbm(mw))
}

pub fn format_track(track: &SpatialTrackPdp) -> String {
    let g = track.geometry();
    let l = track.labels();
    let opt = |v: Option<String>| v.unwrap_or_else(|| UNSET.to_string());
    let values = [
        TRACK_FORMAT_VERSION.to_string(),
        fmt_f64(g.step_m),
        fmt_f64(g.wavelength_m),
        fmt_f64(g.bin_width_s),
        fmt_f64(g.noise_floor_dbm),
        track.n_positions().to_string(),
        track.n_bins().to_string(),
        opt(l.environment.map(|e| e.to_string())),
        opt(l.polarization.map(|p| p.to_string())),
        opt(l.seed.map(|s| s.to_string())),
    ];
    let mut out = String::new();
    for (k, v) in HEADER_KEYS.iter().zip(values) {
        out.push_str(k);
        out.push(',');
        out.push_str(&v);
        out.push('\n');
    }
    out.push_str("data\n");
    let floor_dbm = g.noise_floor_dbm;
    for pos in 0..track.n_positions() {
        out.push_str(&pos.to_string());
        for cell in track.row(pos) {
            out.push(',');
            match cell {
                // a value that rounds onto the floor would no longer read back as valid
                Some(p) if format_dbm(p).parse::<f64>().is_ok_and(|d| dbm_to_mw(d) > dbm_to_mw(floor_dbm)) => {
                    out.push_str(&format_dbm(p))
                }
                _ => out.push_str(NOISE_TOKEN),
            }
        }
        out.push('\n');
    }
    out
}

pub fn save_track(track: &SpatialTrackPdp, path: &Path) -> Result<(), PersistenceError> {
    write_text(path, &format_track(track))
}

fn parse_err(line: usize, column: usize, message: impl Into<String>) -> PersistenceError {
    PersistenceError::Parse {
        line,
        column,
        message: message.into(),
    }
}

/// Comma-separated fields with their 1-based starting columns.
fn fields(line: &str) -> Vec<(usize, &str)> {
    let mut col = 1;
    line.split(',')
        .map(|f| {
            let here = col;
            col += f.chars().count() + 1;
            (here, f)
        })
        .collect()
}

fn parse_value<T: std::str::FromStr>(line: usize, column: usize, key: &str, text: &str) -> Result<T, PersistenceError> {
    text.parse()
        .map_err(|_| parse_err(line, column, format!("`{text}` is not a valid {key}")))
}

pub fn parse_track(text: &str) -> Result<SpatialTrackPdp, PersistenceError> {
    let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l.trim_end_matches('\r')));
    let mut header = Vec::with_capacity(HEADER_KEYS.len());
    for key in HEADER_KEYS {
        let (no, line) = lines
            .next()
            .ok_or_else(|| parse_err(text.lines().count() + 1, 1, format!("missing header field `{key}`")))?;
        let f = fields(line);
        if f[0].1 != key {
            return Err(parse_err(no, 1, format!("expected header field `{key}`, found `{}`", f[0].1)));
        }
        if f.len() != 2 {
            return Err(parse_err(no, 1, format!("header field `{key}` needs exactly one value")));
        }
        header.push((no, f[1].0, f[1].1));
    }
    let (_, _, version) = header[0];
    if version != TRACK_FORMAT_VERSION {
        return Err(PersistenceError::Version {
            found: version.to_string(),
            expected: TRACK_FORMAT_VERSION,
        });
    }
    let num = |i: usize| -> Result<f64, PersistenceError> {
        let (no, col, v) = header[i];
        parse_value(no, col, HEADER_KEYS[i], v)
    };
    let count = |i: usize| -> Result<usize, PersistenceError> {
        let (no, col, v) = header[i];
        parse_value(no, col, HEADER_KEYS[i], v)
    };
    let geometry = TrackGeometry {
        step_m: num(1)?,
        wavelength_m: num(2)?,
        bin_width_s: num(3)?,
        noise_floor_dbm: num(4)?,
    };
    let n_positions = count(5)?;
    let n_bins = count(6)?;
    let label = |i: usize| header[i];
    let labels = TrackLabels {
        environment: match label(7) {
            (_, _, UNSET) => None,
            (no, col, v) => Some(v.parse().map_err(|_| parse_err(no, col, format!("unknown environment `{v}`")))?),
        },
        polarization: match label(8) {
            (_, _, UNSET) => None,
            (no, col, v) => Some(v.parse().map_err(|_| parse_err(no, col, format!("unknown polarization `{v}`")))?),
        },
        seed: match label(9) {
            (_, _, UNSET) => None,
            (no, col, v) => Some(parse_value(no, col, "seed", v)?),
        },
    };

    match lines.next() {
        Some((_, "data")) => {}
        Some((no, other)) => return Err(parse_err(no, 1, format!("expected `data`, found `{other}`"))),
        None => return Err(parse_err(HEADER_KEYS.len() + 1, 1, "missing `data` line")),
    }

    let mut cells = Vec::with_capacity(n_positions * n_bins);
    let mut rows = 0;
    for (no, line) in lines {
        if line.is_empty() {
            continue;
        }
        if rows == n_positions {
            return Err(PersistenceError::Dimension(format!(
                "header declares {n_positions} positions but line {no} holds an extra row"
            )));
        }
        let f = fields(line);
        if f.len() != n_bins + 1 {
            return Err(PersistenceError::Dimension(format!(
                "line {no}: {} power columns, header declares {n_bins} bins",
                f.len() - 1
            )));
        }
        let pos: usize = parse_value(no, f[0].0, "position index", f[0].1)?;
        if pos != rows {
            return Err(parse_err(no, f[0].0, format!("position index {pos} out of order (expected {rows})")));
        }
        for &(col, v) in &f[1..] {
            if v == NOISE_TOKEN {
                cells.push(None);
                continue;
            }
            let dbm: f64 = parse_value(no, col, "dBm power", v)?;
            if !dbm.is_finite() || dbm <= geometry.noise_floor_dbm {
                return Err(parse_err(
                    no,
                    col,
                    format!("power {v} dBm is not above the noise floor; use `{NOISE_TOKEN}`"),
                ));
            }
            cells.push(Some(dbm_to_mw(dbm)));
        }
        rows += 1;
    }
    if rows < n_positions {
        return Err(PersistenceError::Dimension(format!(
            "header declares {n_positions} positions but the body has {rows} ({} missing)",
            n_positions - rows
        )));
    }
    Ok(SpatialTrackPdp::from_cells(geometry, labels, n_positions, n_bins, &cells)?)
}

pub fn load_track(path: &Path) -> Result<SpatialTrackPdp, PersistenceError> {
    parse_track(&read_text(path)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::{Environment, Polarization};

    fn sample() -> SpatialTrackPdp {
        let labels = TrackLabels {
            environment: Some(Environment::Los),
            polarization: Some(Polarization::VH),
            seed: Some(42),
        };
        let powers = [1e-7, 0.0, 3.3e-6, 2e-9, 1.234567e-8, 5e-5];
        SpatialTrackPdp::from_powers(TrackGeometry::default(), labels, 3, 2, &powers).unwrap()
    }

    #[test]
    fn layout() {
        let text = format_track(&sample());
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "format_version,mmwf-track-1");
        assert_eq!(lines[7], "environment,LOS");
        assert_eq!(lines[10], "data");
        assert_eq!(lines[11], "0,-70.000000,NF");
        assert_eq!(lines.len(), 14);
    }

    #[test]
    fn save_load_save_is_stable() {
        let first = format_track(&sample());
        let loaded = parse_track(&first).unwrap();
        assert_eq!(format_track(&loaded), first);
        assert_eq!(parse_track(&format_track(&loaded)).unwrap(), loaded);
        assert_eq!(loaded.labels(), sample().labels());
        assert_eq!(loaded.power(0, 1), None);
    }

    #[test]
    fn quantization_is_bounded() {
        let loaded = parse_track(&format_track(&sample())).unwrap();
        for (a, b) in loaded.powers_mw().iter().zip(sample().powers_mw()) {
            assert!((a - b).abs() <= 2e-7 * b.abs());
        }
    }

    #[test]
    fn short_body_names_shortfall() {
        let text = format_track(&sample());
        let cut: Vec<&str> = text.lines().take(13).collect();
        match parse_track(&cut.join("\n")) {
            Err(PersistenceError::Dimension(m)) => assert!(m.contains("3 positions") && m.contains("has 2"), "{m}"),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn bad_cell_reports_line_and_column() {
        let text = format_track(&sample()).replace("0,-70.000000,NF", "0,-70.000000,abc");
        match parse_track(&text) {
            Err(PersistenceError::Parse { line, column, .. }) => assert_eq!((line, column), (12, 14)),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn version_mismatch() {
        let text = format_track(&sample()).replace("mmwf-track-1", "mmwf-track-9");
        assert!(matches!(parse_track(&text), Err(PersistenceError::Version { .. })));
    }

    #[test]
    fn unset_labels() {
        let t = SpatialTrackPdp::from_powers(TrackGeometry::default(), TrackLabels::default(), 2, 1, &[1e-3, 1e-3]).unwrap();
        let text = format_track(&t);
        assert!(text.contains("seed,-\n"));
        assert_eq!(parse_track(&text).unwrap().labels(), &TrackLabels::default());
    }

    #[test]
    fn wrong_column_count() {
        let text = format_track(&sample()).replace("0,-70.000000,NF", "0,-70.000000");
        assert!(matches!(parse_track(&text), Err(PersistenceError::Dimension(_))));
    }
}
