//! PDP-track analysis: delay binning, fading-sample extraction, envelope
//! distribution fitting, spatial autocorrelation, and exponential model fits.

mod autocorr;
mod binning;
mod fit;
mod samples;

use serde::{Deserialize, Serialize};

pub use autocorr::{
    ensemble_autocorrelation, fit_autocorr_curve, fit_autocorr_model, spatial_autocorrelation,
    AutocorrEstimate, AutocorrFit, AUTOCORR_GRID,
};
pub use binning::bin_delays;
pub use fit::{
    bounding_k, bracket_check, build_fit_report, fit_lognormal, fit_rayleigh, fit_rician,
    moment_k_db, quantile_levels, BoundingK, BracketCheck, EmpiricalCdf, Family, FitReport, LognormalFit,
    RayleighFit, RicianFit, K_GRID_DB, MIN_FIT_SAMPLES,
};
pub use samples::{extract_fading_samples, extract_pooled_samples, FadingSampleSet};

/// How per-bin results from several tracks are combined.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Pooling {
    /// Average over bins within each track, then across tracks.
    #[default]
    PerTrack,
    /// Average over every (track, bin) pair with equal weight.
    Global,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AnalysisConfig {
    /// Entries count as valid only above `noise floor + threshold_db`.
    pub threshold_db: f64,
    /// Fraction of positions a bin must occupy before it contributes.
    pub min_occupancy: f64,
    /// Largest lag, in track steps, of the autocorrelation estimate.
    pub max_lag: usize,
    /// Largest lag used by the exponential model fit.
    pub fit_max_lag: usize,
    /// Whether the model fit sees the lag-0 point, so the fit window matches
    /// the curve it is compared with.
    pub fit_include_lag0: bool,
    pub pooling: Pooling,
    /// CDF-level slack allowed when bracketing the empirical CDF with two Rician laws.
    pub bracket_tolerance: f64,
}

impl Default for AnalysisConfig {
    fn default() -> Self {
        AnalysisConfig {
            threshold_db: 5.0,
            min_occupancy: 0.5,
            max_lag: 20,
            fit_max_lag: 10,
            fit_include_lag0: true,
            pooling: Pooling::PerTrack,
            bracket_tolerance: 0.005,
        }
    }
}

impl AnalysisConfig {
    /// Minimum valid positions per bin, e.g. 33 of 66.
    pub fn required_occupancy(&self, n_positions: usize) -> usize {
        ((self.min_occupancy * n_positions as f64).ceil() as usize).clamp(1, n_positions)
    }
}

/// Pairwise (cascade) summation; rounding error grows as O(log n).
pub fn pairwise_sum(xs: &[f64]) -> f64 {
    if xs.len() <= 16 {
        return xs.iter().sum();
    }
    let mid = xs.len() / 2;
    pairwise_sum(&xs[..mid]) + pairwise_sum(&xs[mid..])
}

pub(crate) fn mean(xs: &[f64]) -> f64 {
    pairwise_sum(xs) / xs.len() as f64
}
