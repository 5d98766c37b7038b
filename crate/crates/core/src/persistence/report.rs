use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{read_text, write_text};
use crate::analysis::{AutocorrEstimate, AutocorrFit, FitReport};
use crate::error::PersistenceError;

pub const REPORT_FORMAT_VERSION: &str = "mmwf-report-1";

/// Everything one analysis run produces, as written to a report file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnalysisReport {
    pub format_version: String,
    pub fit: FitReport,
    pub autocorr: AutocorrEstimate,
    pub autocorr_fit: Option<AutocorrFit>,
    /// First lag, in wavelengths, where the estimate falls below the threshold.
    pub decorrelation_lag_wavelengths: Option<f64>,
    pub decorrelation_threshold: f64,
}

impl AnalysisReport {
    pub fn new(fit: FitReport, autocorr: AutocorrEstimate, autocorr_fit: Option<AutocorrFit>, decorrelation_threshold: f64) -> Self {
        AnalysisReport {
            format_version: REPORT_FORMAT_VERSION.to_string(),
            decorrelation_lag_wavelengths: autocorr.first_lag_below(decorrelation_threshold),
            fit,
            autocorr,
            autocorr_fit,
            decorrelation_threshold,
        }
    }

    fn validate(&self) -> Result<(), PersistenceError> {
        if self.format_version != REPORT_FORMAT_VERSION {
            return Err(PersistenceError::Version {
                found: self.format_version.clone(),
                expected: REPORT_FORMAT_VERSION,
            });
        }
        if self.autocorr.is_empty() {
            return Err(PersistenceError::Report("autocorrelation estimate has no lags".into()));
        }
        if self.autocorr.lags_wavelengths.len() != self.autocorr.coefficients.len() {
            return Err(PersistenceError::Report(format!(
                "autocorrelation estimate has {} lags but {} coefficients",
                self.autocorr.lags_wavelengths.len(),
                self.autocorr.coefficients.len()
            )));
        }
        Ok(())
    }
}

pub fn format_report(report: &AnalysisReport) -> Result<String, PersistenceError> {
    report.validate()?;
    let mut text = serde_json::to_string_pretty(report).map_err(|e| PersistenceError::Report(e.to_string()))?;
    text.push('\n');
    Ok(text)
}

pub fn parse_report(text: &str) -> Result<AnalysisReport, PersistenceError> {
    let report: AnalysisReport = serde_json::from_str(text).map_err(|e| PersistenceError::Parse {
        line: e.line(),
        column: e.column(),
        message: e.to_string(),
    })?;
    report.validate()?;
    Ok(report)
}

pub fn save_report(report: &AnalysisReport, path: &Path) -> Result<(), PersistenceError> {
    write_text(path, &format_report(report)?)
}

pub fn load_report(path: &Path) -> Result<AnalysisReport, PersistenceError> {
    parse_report(&read_text(path)?)
}
