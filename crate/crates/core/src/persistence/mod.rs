//! Line-oriented text formats: tracks, presets, analysis reports, and
//! two-column plot data. Every format opens with a `format_version` field.

mod plot;
mod report;
mod track;

use std::fs;
use std::path::Path;

use crate::channel::{parse_presets, PresetSet};
use crate::error::PersistenceError;

pub use plot::{export_plot_csv, format_plot_csv, ModelCurve, PlotData};
pub use report::{format_report, load_report, parse_report, save_report, AnalysisReport, REPORT_FORMAT_VERSION};
pub use track::{format_track, load_track, parse_track, save_track, TRACK_FORMAT_VERSION};

pub(crate) fn read_text(path: &Path) -> Result<String, PersistenceError> {
    fs::read_to_string(path).map_err(|e| PersistenceError::io(path, e))
}

pub(crate) fn write_text(path: &Path, text: &str) -> Result<(), PersistenceError> {
    fs::write(path, text).map_err(|e| PersistenceError::io(path, e))
}

pub fn load_presets(path: &Path) -> Result<PresetSet, PersistenceError> {
    Ok(parse_presets(&read_text(path)?)?)
}

pub fn save_presets(set: &PresetSet, path: &Path) -> Result<(), PersistenceError> {
    write_text(path, &set.to_toml())
}

/// Shortest text that parses back to the same `f64`.
pub(crate) fn fmt_f64(x: f64) -> String {
    format!("{x:?}")
}
