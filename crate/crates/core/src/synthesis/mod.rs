//! Channel and track synthesis.
//!
//! Omni impulse responses carry one tap per [`TapSpec`] with i.i.d. uniform
//! phases. Directional responses weight each tap by the TX and RX antenna
//! patterns at fixed beam pointing and drop taps that fall below the noise
//! floor. Tracks expand each tap into a spatially correlated Rician power
//! sequence along a linear track.

mod mapping;
mod profile;
mod records;

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::channel::{
    dbm_to_mw, AngleVector, AntennaPattern, AutocorrModel, ChannelImpulseResponse, CirKind,
    FadingPreset, MultipathComponent, SpatialTrackPdp, TrackGeometry, TrackLabels, BIN_WIDTH_S,
    TRACK_POSITIONS, TRACK_STEP_M, WAVELENGTH_M,
};
use crate::error::{ChannelError, SynthesisError};
use crate::rng;

pub use mapping::{
    invert_rician_power_correlation, monte_carlo_power_correlation, rician_power_correlation,
    CorrelationMapping, MappingMode, MappingTable,
};
pub use profile::{default_directional_taps, default_omni_taps, default_pointing, taps_from_cir};
pub use records::{pdp_records_to_track, track_to_pdp_records, PdpRecord};

type Result<T> = std::result::Result<T, SynthesisError>;

/// K-factors at or above this are treated as a pure specular path.
pub const SPECULAR_K_DB: f64 = 60.0;
/// Eigenvalue floor applied to correlation matrices that are not positive definite.
pub const EIGEN_FLOOR: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrackConfig {
    pub n_positions: usize,
    pub step_m: f64,
    pub wavelength_m: f64,
    pub bin_width_s: f64,
    pub noise_floor_dbm: f64,
    pub seed: u64,
}

impl Default for TrackConfig {
    fn default() -> Self {
        TrackConfig {
            n_positions: TRACK_POSITIONS,
            step_m: TRACK_STEP_M,
            wavelength_m: WAVELENGTH_M,
            bin_width_s: BIN_WIDTH_S,
            noise_floor_dbm: -100.0,
            seed: 0,
        }
    }
}

impl TrackConfig {
    pub fn geometry(&self) -> TrackGeometry {
        TrackGeometry {
            step_m: self.step_m,
            wavelength_m: self.wavelength_m,
            bin_width_s: self.bin_width_s,
            noise_floor_dbm: self.noise_floor_dbm,
        }
    }

    pub fn validate(&self) -> std::result::Result<(), ChannelError> {
        if self.n_positions < 2 {
            return Err(ChannelError::InvalidParameter(format!(
                "n_positions must be >= 2, got {}",
                self.n_positions
            )));
        }
        self.geometry().validate()
    }
}

/// Per-tap synthesis target.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TapSpec {
    /// Spatial-mean bin power, dBm.
    pub mean_power_dbm: f64,
    pub delay_s: f64,
    pub k_db: f64,
    pub aod: AngleVector,
    pub aoa: AngleVector,
}

impl TapSpec {
    pub fn new(mean_power_dbm: f64, delay_s: f64, k_db: f64) -> Self {
        TapSpec {
            mean_power_dbm,
            delay_s,
            k_db,
            aod: AngleVector::boresight(),
            aoa: AngleVector::boresight(),
        }
    }

    fn validate(&self, index: usize) -> Result<()> {
        let bad = |reason: String| Err(SynthesisError::InvalidTap { index, reason });
        if !self.mean_power_dbm.is_finite() {
            return bad(format!("mean power {} dBm is not finite", self.mean_power_dbm));
        }
        if !(self.delay_s >= 0.0 && self.delay_s.is_finite()) {
            return bad(format!("delay {} s must be finite and >= 0", self.delay_s));
        }
        Ok(())
    }

    pub fn delay_bin(&self, bin_width_s: f64) -> usize {
        (self.delay_s / bin_width_s).floor() as usize
    }
}

fn check_distinct_bins(taps: &[TapSpec], bin_width_s: f64) -> Result<Vec<usize>> {
    if taps.is_empty() {
        return Err(SynthesisError::NoTaps);
    }
    let mut bins = Vec::with_capacity(taps.len());
    for (i, t) in taps.iter().enumerate() {
        t.validate(i)?;
        let bin = t.delay_bin(bin_width_s);
        if let Some(first) = bins.iter().position(|&b| b == bin) {
            return Err(SynthesisError::DuplicateDelayBin {
                bin,
                first,
                second: i,
                bin_width_s,
            });
        }
        bins.push(bin);
    }
    Ok(bins)
}

/// One tap per `TapSpec` with amplitude `√(mean power in mW)` and a phase drawn
/// uniformly on `[0, 2π)` from the tap's own sub-stream.
pub fn synthesize_omni_cir(taps: &[TapSpec], bin_width_s: f64, seed: u64) -> Result<ChannelImpulseResponse> {
    if !(bin_width_s > 0.0) {
        return Err(ChannelError::domain("bin_width_s", bin_width_s, "> 0").into());
    }
    check_distinct_bins(taps, bin_width_s)?;
    let phase_seed = rng::domain_seed(seed, "phase");
    let components = taps
        .iter()
        .enumerate()
        .map(|(k, t)| {
            let phase = rng::substream(phase_seed, k as u64).random::<f64>() * std::f64::consts::TAU;
            MultipathComponent::new(dbm_to_mw(t.mean_power_dbm).sqrt(), phase, t.delay_s, t.aod, t.aoa)
        })
        .collect::<std::result::Result<Vec<_>, _>>()?;
    Ok(ChannelImpulseResponse::new(components, CirKind::Omni))
}

/// Weights every omni tap by `|g_TX(Θ₀ − Θ_k)|·|g_RX(Φ₀ − Φ_k)|` and keeps
/// those whose weighted power exceeds `noise_floor_dbm`.
pub fn apply_directional_filter(
    cir: &ChannelImpulseResponse,
    tx_pattern: &AntennaPattern,
    rx_pattern: &AntennaPattern,
    tx_pointing: AngleVector,
    rx_pointing: AngleVector,
    noise_floor_dbm: f64,
) -> std::result::Result<ChannelImpulseResponse, ChannelError> {
    if !cir.is_omni() {
        return Err(ChannelError::Contract(
            "directional filtering needs an omnidirectional impulse response".into(),
        ));
    }
    let floor_mw = dbm_to_mw(noise_floor_dbm);
    let taps = cir
        .taps()
        .iter()
        .filter_map(|tap| {
            let (tx_az, tx_el) = tap.aod.offset_from(&tx_pointing);
            let (rx_az, rx_el) = tap.aoa.offset_from(&rx_pointing);
            let g = tx_pattern.amplitude_gain(tx_az, tx_el) * rx_pattern.amplitude_gain(rx_az, rx_el);
            let weighted = tap.with_amplitude(tap.amplitude() * g);
            (weighted.power() > floor_mw).then_some(weighted)
        })
        .collect();
    Ok(ChannelImpulseResponse::new(
        taps,
        CirKind::Directional {
            tx_pointing,
            rx_pointing,
        },
    ))
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct SynthesisDiagnostics {
    /// Taps whose correlation matrix needed eigenvalue clipping.
    pub eigen_clipped_taps: Vec<usize>,
    /// The model went negative (or above 1) somewhere on the track and was clipped into `[0, 1]`.
    pub model_clipped: bool,
    pub tap_bins: Vec<usize>,
    pub tap_k_db: Vec<f64>,
}

impl SynthesisDiagnostics {
    pub fn has_warnings(&self) -> bool {
        !self.eigen_clipped_taps.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SynthesizedTrack {
    pub track: SpatialTrackPdp,
    pub diagnostics: SynthesisDiagnostics,
}

/// Target power correlation per lag (index 0 pinned to 1), clipped into `[0, 1]`.
fn target_power_correlation(model: &AutocorrModel, geometry: &TrackGeometry, n: usize) -> (Vec<f64>, bool) {
    let mut clipped = false;
    let r = (0..n)
        .map(|i| {
            if i == 0 {
                return 1.0;
            }
            let f = model.eval(geometry.lag_wavelengths(i));
            if !(0.0..=1.0).contains(&f) {
                clipped = true;
            }
            f.clamp(0.0, 1.0)
        })
        .collect();
    (r, clipped)
}

/// Lower-triangular factor `L` with `L·Lᵀ` equal to the Toeplitz matrix built
/// from `first_row`, clipping eigenvalues at [`EIGEN_FLOOR`] when the matrix is
/// not positive definite. The flag reports whether clipping happened.
pub fn correlation_factor(first_row: &[f64]) -> (DMatrix<f64>, bool) {
    let n = first_row.len();
    let r = DMatrix::from_fn(n, n, |i, j| first_row[i.abs_diff(j)]);
    if let Some(ch) = r.clone().cholesky() {
        return (ch.l(), false);
    }
    let eig = r.symmetric_eigen();
    let clipped = eig.eigenvalues.map(|v| v.max(EIGEN_FLOOR));
    let mut repaired = &eig.eigenvectors * DMatrix::from_diagonal(&clipped) * eig.eigenvectors.transpose();
    let d = DVector::from_iterator(n, (0..n).map(|i| repaired[(i, i)].sqrt().recip()));
    for i in 0..n {
        for j in 0..n {
            repaired[(i, j)] *= d[i] * d[j];
        }
    }
    let factor = match repaired.clone().cholesky() {
        Some(ch) => ch.l(),
        None => {
            let mut f = eig.eigenvectors.clone();
            for (j, v) in clipped.iter().enumerate() {
                f.column_mut(j).scale_mut(v.sqrt());
            }
            f
        }
    };
    (factor, true)
}

/// Linear power sequence `|A + s(x_l)|²` at unit total mean power, where the
/// scattered part `s` has per-lag Gaussian correlation `gaussian_corr`.
fn rician_power_sequence(
    k_linear: f64,
    factor: &DMatrix<f64>,
    rng: &mut rng::StreamRng,
) -> Vec<f64> {
    let n = factor.nrows();
    let a = (k_linear / (k_linear + 1.0)).sqrt();
    let sigma = (0.5 / (k_linear + 1.0)).sqrt();
    let re = DVector::from_iterator(n, (0..n).map(|_| rng.sample::<f64, _>(StandardNormal)));
    let im = DVector::from_iterator(n, (0..n).map(|_| rng.sample::<f64, _>(StandardNormal)));
    let s_re = factor * re;
    let s_im = factor * im;
    (0..n)
        .map(|l| (a + sigma * s_re[l]).powi(2) + (sigma * s_im[l]).powi(2))
        .collect()
}

/// Spatial track with the default (closed-form Rician) correlation mapping.
pub fn synthesize_track(taps: &[TapSpec], autocorr: &AutocorrModel, cfg: &TrackConfig) -> Result<SynthesizedTrack> {
    synthesize_track_with(taps, autocorr, cfg, &CorrelationMapping::Analytic)
}

/// Expands each tap into a length-`n_positions` Rician power sequence whose
/// spatial mean equals the tap's mean power and whose power correlation
/// follows `autocorr` through `mapping`. Tap `k` draws from sub-stream `k` of
/// `cfg.seed`.
pub fn synthesize_track_with(
    taps: &[TapSpec],
    autocorr: &AutocorrModel,
    cfg: &TrackConfig,
    mapping: &CorrelationMapping,
) -> Result<SynthesizedTrack> {
    cfg.validate()?;
    let bins = check_distinct_bins(taps, cfg.bin_width_s)?;
    for (index, t) in taps.iter().enumerate() {
        if !t.k_db.is_finite() {
            return Err(SynthesisError::InvalidTap {
                index,
                reason: format!("K = {} dB must be finite", t.k_db),
            });
        }
    }
    let n = cfg.n_positions;
    let n_bins = bins.iter().max().copied().unwrap_or(0) + 1;
    let geometry = cfg.geometry();
    let (power_corr, model_clipped) = target_power_correlation(autocorr, &geometry, n);

    let mut powers = vec![0.0; n * n_bins];
    let mut diagnostics = SynthesisDiagnostics {
        model_clipped,
        tap_bins: bins.clone(),
        tap_k_db: taps.iter().map(|t| t.k_db).collect(),
        ..Default::default()
    };

    for (k, (tap, &bin)) in taps.iter().zip(&bins).enumerate() {
        let target_mw = dbm_to_mw(tap.mean_power_dbm);
        let sequence = if tap.k_db >= SPECULAR_K_DB {
            vec![1.0; n]
        } else {
            let k_lin = 10f64.powf(tap.k_db / 10.0);
            let gaussian: Vec<f64> = power_corr
                .iter()
                .enumerate()
                .map(|(i, &r)| if i == 0 { 1.0 } else { mapping.gaussian_for_power(k_lin, r) })
                .collect();
            let (factor, clipped) = correlation_factor(&gaussian);
            if clipped {
                diagnostics.eigen_clipped_taps.push(k);
            }
            let mut stream = rng::substream(cfg.seed, k as u64);
            rician_power_sequence(k_lin, &factor, &mut stream)
        };
        let mean = sequence.iter().sum::<f64>() / n as f64;
        let scale = target_mw / mean;
        for (l, p) in sequence.iter().enumerate() {
            powers[l * n_bins + bin] = p * scale;
        }
    }

    let labels = TrackLabels {
        seed: Some(cfg.seed),
        ..Default::default()
    };
    let track = SpatialTrackPdp::from_powers(geometry, labels, n, n_bins, &powers)?;
    Ok(SynthesizedTrack { track, diagnostics })
}

/// Redraws each tap's K uniformly in dB over `k_range_db`.
pub fn assign_k_uniform_db(taps: &[TapSpec], k_range_db: [f64; 2], seed: u64) -> Vec<TapSpec> {
    let mut stream = rng::stream(rng::domain_seed(seed, "k-assign"));
    let [lo, hi] = k_range_db;
    taps.iter()
        .map(|t| {
            let u: f64 = stream.random();
            TapSpec {
                k_db: lo + u * (hi - lo),
                ..*t
            }
        })
        .collect()
}

/// Seed of track `index` within an ensemble seeded by `master`.
pub fn track_seed(master: u64, index: usize) -> u64 {
    rng::substream_seed(master, index as u64)
}

/// Track `index` of an ensemble seeded by `cfg.seed`: per-tap K drawn
/// uniformly in dB over `k_range_db`, spatial correlation from `autocorr`.
/// Only the seed label is set.
pub fn synthesize_ensemble_track(
    profile: &[TapSpec],
    k_range_db: [f64; 2],
    autocorr: &AutocorrModel,
    cfg: &TrackConfig,
    index: usize,
    mapping: &CorrelationMapping,
) -> Result<SynthesizedTrack> {
    let seed = track_seed(cfg.seed, index);
    let taps = assign_k_uniform_db(profile, k_range_db, seed);
    let cfg = TrackConfig { seed, ..*cfg };
    let mut out = synthesize_track_with(&taps, autocorr, &cfg, mapping)?;
    out.track.set_labels(TrackLabels {
        seed: Some(seed),
        ..TrackLabels::default()
    });
    Ok(out)
}

/// [`synthesize_ensemble_track`] for a preset, with environment and
/// polarization labels filled in.
pub fn synthesize_preset_track(
    profile: &[TapSpec],
    preset: &FadingPreset,
    cfg: &TrackConfig,
    index: usize,
    mapping: &CorrelationMapping,
) -> Result<SynthesizedTrack> {
    let mut out = synthesize_ensemble_track(profile, preset.k_range_db, &preset.autocorr, cfg, index, mapping)?;
    let labels = TrackLabels {
        environment: Some(preset.environment),
        polarization: Some(preset.polarization),
        ..out.track.labels().clone()
    };
    out.track.set_labels(labels);
    Ok(out)
}

/// `n_tracks` preset tracks generated in parallel; the result is independent
/// of the thread count.
pub fn synthesize_preset_ensemble(
    profile: &[TapSpec],
    preset: &FadingPreset,
    cfg: &TrackConfig,
    n_tracks: usize,
    mapping: &CorrelationMapping,
) -> Result<Vec<SynthesizedTrack>> {
    (0..n_tracks)
        .into_par_iter()
        .map(|i| synthesize_preset_track(profile, preset, cfg, i, mapping))
        .collect()
}
