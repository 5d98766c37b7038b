use serde::{Deserialize, Serialize};

use super::{mean, AnalysisConfig};
use crate::channel::SpatialTrackPdp;
use crate::error::AnalysisError;

/// Pooled small-scale fading samples `|a_k|² / mean(|a_k|²)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FadingSampleSet {
    pub samples: Vec<f64>,
    pub source_bins: usize,
    pub source_positions: usize,
}

impl FadingSampleSet {
    /// Wraps already-normalized power ratios (e.g. direct draws from a law).
    pub fn from_power_ratios(samples: Vec<f64>) -> Result<Self, AnalysisError> {
        if let Some(bad) = samples.iter().find(|&&s| !(s > 0.0 && s.is_finite())) {
            return Err(AnalysisError::Data(format!("sample {bad} is not a positive finite power ratio")));
        }
        let n = samples.len();
        Ok(FadingSampleSet {
            samples,
            source_bins: 1,
            source_positions: n,
        })
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    /// Envelope (voltage) samples, `√(power ratio)`.
    pub fn voltages(&self) -> Vec<f64> {
        self.samples.iter().map(|p| p.sqrt()).collect()
    }

    fn extend(&mut self, other: FadingSampleSet) {
        self.samples.extend(other.samples);
        self.source_bins += other.source_bins;
        self.source_positions = self.source_positions.max(other.source_positions);
    }
}

/// Positions of `bin` above the analysis threshold, with their powers.
pub(crate) fn valid_sequence(track: &SpatialTrackPdp, bin: usize, cfg: &AnalysisConfig) -> Vec<Option<f64>> {
    let threshold = track.noise_floor_mw() * 10f64.powf(cfg.threshold_db / 10.0);
    track
        .bin_sequence(bin)
        .into_iter()
        .map(|p| p.filter(|&v| v > threshold))
        .collect()
}

/// Bins with enough valid positions to contribute, plus all per-bin counts.
pub(crate) fn occupied_bins(track: &SpatialTrackPdp, cfg: &AnalysisConfig) -> Result<Vec<usize>, AnalysisError> {
    let required = cfg.required_occupancy(track.n_positions());
    let counts: Vec<usize> = (0..track.n_bins())
        .map(|b| valid_sequence(track, b, cfg).iter().flatten().count())
        .collect();
    let bins: Vec<usize> = counts
        .iter()
        .enumerate()
        .filter(|&(_, &c)| c >= required)
        .map(|(b, _)| b)
        .collect();
    if bins.is_empty() {
        return Err(AnalysisError::NoOccupiedBins {
            required,
            positions: track.n_positions(),
            counts,
        });
    }
    Ok(bins)
}

/// Normalizes each occupied bin by its spatial-mean power over the valid
/// positions and pools every bin into one sample set.
pub fn extract_fading_samples(track: &SpatialTrackPdp, cfg: &AnalysisConfig) -> Result<FadingSampleSet, AnalysisError> {
    let bins = occupied_bins(track, cfg)?;
    let mut samples = Vec::new();
    for &b in &bins {
        let kept: Vec<f64> = valid_sequence(track, b, cfg).into_iter().flatten().collect();
        let m = mean(&kept);
        samples.extend(kept.iter().map(|p| p / m));
    }
    Ok(FadingSampleSet {
        samples,
        source_bins: bins.len(),
        source_positions: track.n_positions(),
    })
}

/// Per-track extraction over several tracks, concatenated in input order.
/// Tracks with no occupied bin are skipped; it is an error if all are.
pub fn extract_pooled_samples(tracks: &[SpatialTrackPdp], cfg: &AnalysisConfig) -> Result<FadingSampleSet, AnalysisError> {
    let mut pooled: Option<FadingSampleSet> = None;
    let mut last_err = None;
    for t in tracks {
        match extract_fading_samples(t, cfg) {
            Ok(s) => match pooled.as_mut() {
                Some(p) => p.extend(s),
                None => pooled = Some(s),
            },
            Err(e @ AnalysisError::NoOccupiedBins { .. }) => last_err = Some(e),
            Err(e) => return Err(e),
        }
    }
    pooled.ok_or_else(|| last_err.unwrap_or_else(|| AnalysisError::InsufficientData("no tracks given".into())))
}
