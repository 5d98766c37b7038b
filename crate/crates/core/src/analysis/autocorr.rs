use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::samples::{occupied_bins, valid_sequence};
use super::{mean, pairwise_sum, AnalysisConfig, Pooling};
use crate::channel::{AutocorrModel, SpatialTrackPdp};
use crate::error::AnalysisError;

/// Coarse search grid of the model fit: `(first, last, step)` for a, b, c.
pub const AUTOCORR_GRID: [(f64, f64, f64); 3] = [(0.0, 1.2, 0.01), (0.0, 6.0, 0.05), (-0.5, 0.5, 0.01)];

/// Spatial power autocorrelation against lag.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AutocorrEstimate {
    pub lags_wavelengths: Vec<f64>,
    /// `None` where every (bin, lag) pair was excluded.
    pub coefficients: Vec<Option<f64>>,
    pub n_bins_averaged: usize,
    pub n_tracks: usize,
}

impl AutocorrEstimate {
    pub fn new(lags_wavelengths: Vec<f64>, coefficients: Vec<Option<f64>>, n_bins_averaged: usize, n_tracks: usize) -> Result<Self, AnalysisError> {
        if lags_wavelengths.is_empty() || lags_wavelengths.len() != coefficients.len() {
            return Err(AnalysisError::Data(format!(
                "{} lags for {} coefficients",
                lags_wavelengths.len(),
                coefficients.len()
            )));
        }
        if lags_wavelengths[0] != 0.0 || lags_wavelengths.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(AnalysisError::Data("lags must start at 0 and increase".into()));
        }
        if coefficients[0] != Some(1.0) {
            return Err(AnalysisError::Data("lag-0 coefficient must be exactly 1".into()));
        }
        if let Some(bad) = coefficients.iter().flatten().find(|c| !(c.is_finite() && c.abs() <= 1.0 + 1e-12)) {
            return Err(AnalysisError::Data(format!("coefficient {bad} outside [-1, 1]")));
        }
        Ok(AutocorrEstimate {
            lags_wavelengths,
            coefficients,
            n_bins_averaged,
            n_tracks,
        })
    }

    pub fn len(&self) -> usize {
        self.coefficients.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coefficients.is_empty()
    }

    /// First lag, in wavelengths, where the coefficient drops below `threshold`.
    pub fn first_lag_below(&self, threshold: f64) -> Option<f64> {
        self.lags_wavelengths
            .iter()
            .zip(&self.coefficients)
            .find(|(_, c)| matches!(c, Some(v) if *v < threshold))
            .map(|(&l, _)| l)
    }

    /// Mean squared difference against `model` over lag indices `0..=max_lag`,
    /// skipping missing coefficients.
    pub fn mse_against(&self, model: &AutocorrModel, max_lag: usize) -> f64 {
        let sq: Vec<f64> = self
            .lags_wavelengths
            .iter()
            .zip(&self.coefficients)
            .take(max_lag + 1)
            .filter_map(|(&l, c)| c.map(|v| (v - model.eval(l)).powi(2)))
            .collect();
        mean(&sq)
    }
}

/// Normalized covariance between `x[l]` and `x[l + lag]`, using
/// separate means for the leading and lagging segments. Only positions where
/// both entries are valid contribute.
fn lag_coefficient(seq: &[Option<f64>], lag: usize) -> Option<f64> {
    let (lead, trail): (Vec<f64>, Vec<f64>) = seq
        .iter()
        .zip(seq.iter().skip(lag))
        .filter_map(|(a, b)| Some(((*a)?, (*b)?)))
        .unzip();
    let constant = |v: &[f64]| v.iter().all(|&x| x == v[0]);
    if lead.len() < 2 || constant(&lead) || constant(&trail) {
        return None;
    }
    let (ml, mt) = (mean(&lead), mean(&trail));
    let dl: Vec<f64> = lead.iter().map(|v| v - ml).collect();
    let dt: Vec<f64> = trail.iter().map(|v| v - mt).collect();
    let cov = pairwise_sum(&dl.iter().zip(&dt).map(|(a, b)| a * b).collect::<Vec<_>>());
    let vl = pairwise_sum(&dl.iter().map(|a| a * a).collect::<Vec<_>>());
    let vt = pairwise_sum(&dt.iter().map(|a| a * a).collect::<Vec<_>>());
    if vl == 0.0 || vt == 0.0 {
        return None;
    }
    Some((cov / (vl * vt).sqrt()).clamp(-1.0, 1.0))
}

struct TrackCoefficients {
    /// `[bin][lag]`, lag 0 excluded.
    per_bin: Vec<Vec<Option<f64>>>,
    lags: usize,
}

fn track_coefficients(track: &SpatialTrackPdp, cfg: &AnalysisConfig) -> Result<TrackCoefficients, AnalysisError> {
    let bins = occupied_bins(track, cfg)?;
    let lags = cfg.max_lag.min(track.n_positions() - 1);
    let per_bin = bins
        .iter()
        .map(|&b| {
            let seq = valid_sequence(track, b, cfg);
            (1..=lags).map(|i| lag_coefficient(&seq, i)).collect()
        })
        .collect();
    Ok(TrackCoefficients { per_bin, lags })
}

/// Average of the present entries of each column.
fn average_columns(rows: &[Vec<Option<f64>>], width: usize) -> Vec<Option<f64>> {
    (0..width)
        .map(|j| {
            let present: Vec<f64> = rows.iter().filter_map(|r| r.get(j).copied().flatten()).collect();
            (!present.is_empty()).then(|| mean(&present))
        })
        .collect()
}

fn assemble(track: &SpatialTrackPdp, lags: usize, body: Vec<Option<f64>>, n_bins: usize, n_tracks: usize) -> AutocorrEstimate {
    let lags_wavelengths = (0..=lags).map(|i| track.geometry().lag_wavelengths(i)).collect();
    let mut coefficients = Vec::with_capacity(lags + 1);
    coefficients.push(Some(1.0));
    coefficients.extend(body);
    AutocorrEstimate {
        lags_wavelengths,
        coefficients,
        n_bins_averaged: n_bins,
        n_tracks,
    }
}

/// Per-bin lag coefficients averaged over every occupied bin of one track.
pub fn spatial_autocorrelation(track: &SpatialTrackPdp, cfg: &AnalysisConfig) -> Result<AutocorrEstimate, AnalysisError> {
    let tc = track_coefficients(track, cfg)?;
    let body = average_columns(&tc.per_bin, tc.lags);
    Ok(assemble(track, tc.lags, body, tc.per_bin.len(), 1))
}

/// Ensemble estimate over tracks sharing one geometry, pooled per `cfg.pooling`.
/// Tracks without an occupied bin are skipped.
pub fn ensemble_autocorrelation(tracks: &[SpatialTrackPdp], cfg: &AnalysisConfig) -> Result<AutocorrEstimate, AnalysisError> {
    let first = tracks
        .first()
        .ok_or_else(|| AnalysisError::InsufficientData("no tracks given".into()))?;
    let g = first.geometry();
    if let Some(t) = tracks.iter().find(|t| {
        t.geometry().step_m != g.step_m || t.geometry().wavelength_m != g.wavelength_m || t.n_positions() != first.n_positions()
    }) {
        return Err(AnalysisError::Data(format!(
            "track geometry differs within the ensemble (step {} m vs {} m)",
            t.geometry().step_m,
            g.step_m
        )));
    }
    let results: Vec<Result<TrackCoefficients, AnalysisError>> =
        tracks.par_iter().map(|t| track_coefficients(t, cfg)).collect();
    let mut kept = Vec::new();
    let mut last_err = None;
    for r in results {
        match r {
            Ok(tc) => kept.push(tc),
            Err(e @ AnalysisError::NoOccupiedBins { .. }) => last_err = Some(e),
            Err(e) => return Err(e),
        }
    }
    if kept.is_empty() {
        return Err(last_err.expect("at least one track was given"));
    }
    let lags = kept[0].lags;
    let n_bins: usize = kept.iter().map(|tc| tc.per_bin.len()).sum();
    let body = match cfg.pooling {
        Pooling::PerTrack => {
            let per_track: Vec<Vec<Option<f64>>> = kept.iter().map(|tc| average_columns(&tc.per_bin, lags)).collect();
            average_columns(&per_track, lags)
        }
        Pooling::Global => {
            let all: Vec<Vec<Option<f64>>> = kept.into_iter().flat_map(|tc| tc.per_bin).collect();
            average_columns(&all, lags)
        }
    };
    Ok(assemble(first, lags, body, n_bins, tracks.len()))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AutocorrFit {
    pub model: AutocorrModel,
    pub mse: f64,
    /// `b` sits at its grid minimum, so `a` and `c` are only identified through `a − c`.
    pub degenerate: bool,
    pub n_points: usize,
}

fn grid_axis(axis: (f64, f64, f64)) -> Vec<f64> {
    let (lo, hi, step) = axis;
    let n = ((hi - lo) / step).round() as i64;
    // integer steps divided out keep grid values at their shortest decimal form
    let scale = (1.0 / step).round();
    let first = (lo * scale).round() as i64;
    (0..=n).map(|i| (first + i) as f64 / scale).collect()
}

fn sse(xs: &[f64], ys: &[f64], a: f64, b: f64, c: f64) -> f64 {
    xs.iter().zip(ys).map(|(&x, &y)| (a * (-b * x).exp() - c - y).powi(2)).sum()
}

/// Best bounded (a, c) for fixed b by linear least squares on `a·u − c`.
fn best_ac(us: &[f64], ys: &[f64], a_rng: (f64, f64), c_rng: (f64, f64)) -> (f64, f64, f64) {
    let n = us.len() as f64;
    let (su, sy) = (us.iter().sum::<f64>(), ys.iter().sum::<f64>());
    let suu: f64 = us.iter().map(|u| u * u).sum();
    let suy: f64 = us.iter().zip(ys).map(|(u, y)| u * y).sum();
    let eval = |a: f64, c: f64| us.iter().zip(ys).map(|(&u, &y)| (a * u - c - y).powi(2)).sum::<f64>();
    let c_for = |a: f64| ((a * su - sy) / n).clamp(c_rng.0, c_rng.1);
    let a_for = |c: f64| if suu > 0.0 { ((suy + c * su) / suu).clamp(a_rng.0, a_rng.1) } else { a_rng.0 };

    let mut cands = Vec::with_capacity(9);
    let var_u = suu - su * su / n;
    if var_u > 0.0 {
        let a = (suy - su * sy / n) / var_u;
        if (a_rng.0..=a_rng.1).contains(&a) {
            let c = (a * su - sy) / n;
            if (c_rng.0..=c_rng.1).contains(&c) {
                cands.push((a, c));
            }
        }
    }
    for a in [a_rng.0, a_rng.1] {
        cands.push((a, c_for(a)));
    }
    for c in [c_rng.0, c_rng.1] {
        cands.push((a_for(c), c));
    }
    cands
        .into_iter()
        .map(|(a, c)| (a, c, eval(a, c)))
        .fold((0.0, 0.0, f64::INFINITY), |best, cand| if cand.2 < best.2 { cand } else { best })
}

/// MMSE fit of `a·e^{−b·Δx} − c` to every given point: coarse grid with
/// ties broken toward the smallest b and then the smallest |c|, followed by
/// a bounded refinement around the grid optimum.
pub fn fit_autocorr_curve(lags_wavelengths: &[f64], values: &[f64]) -> Result<AutocorrFit, AnalysisError> {
    if lags_wavelengths.len() != values.len() {
        return Err(AnalysisError::Data(format!(
            "{} lags for {} values",
            lags_wavelengths.len(),
            values.len()
        )));
    }
    if let Some(bad) = lags_wavelengths.iter().chain(values).find(|v| !v.is_finite()) {
        return Err(AnalysisError::Data(format!("non-finite autocorrelation input {bad}")));
    }
    if lags_wavelengths.iter().any(|&x| x < 0.0) {
        return Err(AnalysisError::Data("negative lag".into()));
    }
    if values.len() < 3 {
        return Err(AnalysisError::InsufficientData(format!(
            "{} usable lags, at least 3 required",
            values.len()
        )));
    }
    let (xs, ys) = (lags_wavelengths, values);
    let n = xs.len() as f64;
    let [a_axis, b_axis, c_axis] = AUTOCORR_GRID;
    let a_grid = grid_axis(a_axis);
    let b_grid = grid_axis(b_axis);
    let c_grid = grid_axis(c_axis);
    let c_step = c_axis.2;

    // (sse, a, b, c) for each b
    let per_b: Vec<(f64, f64, f64, f64)> = b_grid
        .par_iter()
        .map(|&b| {
            let us: Vec<f64> = xs.iter().map(|&x| (-b * x).exp()).collect();
            let mut best: (f64, f64, f64, f64) = (f64::INFINITY, 0.0, 0.0, 0.0);
            for &a in &a_grid {
                let mean_r = us.iter().zip(ys).map(|(&u, &y)| a * u - y).sum::<f64>() / n;
                let m = ((mean_r - c_axis.0) / c_step).floor() as i64;
                for idx in [m, m + 1] {
                    let idx = idx.clamp(0, c_grid.len() as i64 - 1) as usize;
                    let c = c_grid[idx];
                    let e = sse(xs, ys, a, b, c);
                    let tol = 1e-12 * best.0.max(1e-12);
                    if best.0.is_infinite() || e < best.0 - tol || ((e - best.0).abs() <= tol && c.abs() < best.3.abs()) {
                        best = (e, a, b, c);
                    }
                }
            }
            best
        })
        .collect();
    let mut best = per_b[0];
    for &cand in &per_b[1..] {
        let tol = 1e-12 * best.0.max(1e-12);
        // b ascends, so an equal error never displaces an earlier b
        if cand.0 < best.0 - tol {
            best = cand;
        }
    }
    let (mut err, mut a, mut b, mut c) = best;

    if b > 0.0 {
        let a_rng = (a_axis.0, a_axis.1);
        let c_rng = (c_axis.0, c_axis.1);
        let profile = |b: f64| {
            let us: Vec<f64> = xs.iter().map(|&x| (-b * x).exp()).collect();
            best_ac(&us, ys, a_rng, c_rng)
        };
        // pick the basin with (a, c) free, then polish b inside it
        let mut centre = b;
        let mut centre_err = profile(b).2;
        for &bg in &b_grid[1..] {
            let e = profile(bg).2;
            if e < centre_err {
                (centre, centre_err) = (bg, e);
            }
        }
        let (mut lo, mut hi) = ((centre - b_axis.2).max(b_axis.0), (centre + b_axis.2).min(b_axis.1));
        let phi = (5f64.sqrt() - 1.0) / 2.0;
        let mut x1 = hi - phi * (hi - lo);
        let mut x2 = lo + phi * (hi - lo);
        let mut f1 = profile(x1).2;
        let mut f2 = profile(x2).2;
        for _ in 0..80 {
            if f1 <= f2 {
                hi = x2;
                x2 = x1;
                f2 = f1;
                x1 = hi - phi * (hi - lo);
                f1 = profile(x1).2;
            } else {
                lo = x1;
                x1 = x2;
                f1 = f2;
                x2 = lo + phi * (hi - lo);
                f2 = profile(x2).2;
            }
        }
        let b_ref = 0.5 * (lo + hi);
        let (a_ref, c_ref, e_ref) = profile(b_ref);
        if e_ref < err - 1e-15 {
            (err, a, b, c) = (e_ref, a_ref, b_ref, c_ref);
        }
    }
    let model = AutocorrModel::new(a, b, c)?;
    Ok(AutocorrFit {
        model,
        mse: err / n,
        degenerate: b == b_axis.0,
        n_points: xs.len(),
    })
}

/// Fits the exponential model to an estimate over lags `0..=cfg.fit_max_lag`
/// (or `1..=` when `cfg.fit_include_lag0` is off), skipping missing coefficients.
pub fn fit_autocorr_model(estimate: &AutocorrEstimate, cfg: &AnalysisConfig) -> Result<AutocorrFit, AnalysisError> {
    if estimate.len() < 4 {
        return Err(AnalysisError::InsufficientData(format!(
            "{} lags, at least 4 required",
            estimate.len()
        )));
    }
    let first = usize::from(!cfg.fit_include_lag0);
    let (xs, ys): (Vec<f64>, Vec<f64>) = estimate
        .lags_wavelengths
        .iter()
        .zip(&estimate.coefficients)
        .take(cfg.fit_max_lag + 1)
        .skip(first)
        .filter_map(|(&x, c)| c.map(|v| (x, v)))
        .unzip();
    fit_autocorr_curve(&xs, &ys)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::{TrackGeometry, TrackLabels};

    fn track(n: usize, bins: usize, powers: &[f64]) -> SpatialTrackPdp {
        SpatialTrackPdp::from_powers(TrackGeometry::default(), TrackLabels::default(), n, bins, powers).unwrap()
    }

    #[test]
    fn alternating_is_anticorrelated() {
        let p: Vec<f64> = (0..66).map(|i| if i % 2 == 0 { 1e-3 } else { 3e-3 }).collect();
        let e = spatial_autocorrelation(&track(66, 1, &p), &AnalysisConfig::default()).unwrap();
        assert_eq!(e.coefficients[0], Some(1.0));
        assert_eq!(e.coefficients[1], Some(-1.0));
        assert!((e.coefficients[2].unwrap() - 1.0).abs() < 1e-15);
        assert_eq!(e.len(), 21);
    }

    #[test]
    fn constant_track_reports_missing_lags() {
        let e = spatial_autocorrelation(&track(66, 1, &[1e-3; 66]), &AnalysisConfig::default()).unwrap();
        assert_eq!(e.coefficients[0], Some(1.0));
        assert!(e.coefficients[1..].iter().all(Option::is_none));
    }

    #[test]
    fn lags_are_in_wavelengths() {
        let p: Vec<f64> = (0..10).map(|i| 1e-3 * (1.0 + i as f64)).collect();
        let e = spatial_autocorrelation(&track(10, 1, &p), &AnalysisConfig::default()).unwrap();
        assert_eq!(e.len(), 10);
        assert!((e.lags_wavelengths[2] - TrackGeometry::default().lag_wavelengths(2)).abs() < 1e-15);
    }

    #[test]
    fn segment_means_are_separate() {
        // a linear ramp is perfectly correlated with its shift once each segment has its own mean
        let p: Vec<f64> = (0..20).map(|i| 1e-3 * (1.0 + i as f64)).collect();
        let e = spatial_autocorrelation(&track(20, 1, &p), &AnalysisConfig::default()).unwrap();
        for c in &e.coefficients[1..18] {
            assert!((c.unwrap() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn pooling_modes_differ_only_in_weighting() {
        let a: Vec<f64> = (0..66 * 2).map(|i| 1e-3 * (1.0 + ((i * 7) % 5) as f64)).collect();
        let b: Vec<f64> = (0..66).map(|i| 1e-3 * (1.0 + ((i * 3) % 4) as f64)).collect();
        let tracks = vec![track(66, 2, &a), track(66, 1, &b)];
        let mut cfg = AnalysisConfig::default();
        let per_track = ensemble_autocorrelation(&tracks, &cfg).unwrap();
        cfg.pooling = Pooling::Global;
        let global = ensemble_autocorrelation(&tracks, &cfg).unwrap();
        assert_eq!(per_track.n_bins_averaged, 3);
        assert_eq!(per_track.coefficients[0], global.coefficients[0]);
        let t0 = spatial_autocorrelation(&tracks[0], &cfg).unwrap();
        let t1 = spatial_autocorrelation(&tracks[1], &cfg).unwrap();
        let want = 0.5 * (t0.coefficients[1].unwrap() + t1.coefficients[1].unwrap());
        assert!((per_track.coefficients[1].unwrap() - want).abs() < 1e-15);
    }

    fn sampled(m: &AutocorrModel, lags: usize) -> (Vec<f64>, Vec<f64>) {
        let xs: Vec<f64> = (0..=lags).map(|i| i as f64 * 0.5).collect();
        let ys = xs.iter().map(|&x| m.eval(x)).collect();
        (xs, ys)
    }

    #[test]
    fn recovers_exact_model() {
        for (a, b, c) in [(0.99, 2.05, 0.0), (0.9, 1.05, -0.1), (1.0, 0.9, 0.05)] {
            let m = AutocorrModel::new(a, b, c).unwrap();
            let (xs, ys) = sampled(&m, 20);
            let f = fit_autocorr_curve(&xs, &ys).unwrap();
            assert!((f.model.a - a).abs() <= 0.01, "{f:?}");
            assert!((f.model.b - b).abs() <= 0.05, "{f:?}");
            assert!((f.model.c - c).abs() <= 0.01, "{f:?}");
            assert!(f.mse < 1e-20);
            assert!(!f.degenerate);
        }
    }

    #[test]
    fn flat_input_is_degenerate() {
        let xs: Vec<f64> = (0..=20).map(|i| i as f64 * 0.5).collect();
        let f = fit_autocorr_curve(&xs, &vec![1.0; 21]).unwrap();
        assert!(f.degenerate);
        assert_eq!(f.model.b, 0.0);
        assert!((f.model.a - f.model.c - 1.0).abs() < 1e-12);
        assert_eq!(f.model.c, 0.0);
    }

    #[test]
    fn rejects_non_finite() {
        assert!(matches!(
            fit_autocorr_curve(&[0.0, 0.5, 1.0], &[1.0, f64::NAN, 0.2]),
            Err(AnalysisError::Data(_))
        ));
    }

    #[test]
    fn estimate_fit_window() {
        let m = AutocorrModel::new(0.9, 1.05, 0.0).unwrap();
        let (xs, ys) = sampled(&m, 20);
        let mut coefs: Vec<Option<f64>> = ys.into_iter().map(Some).collect();
        coefs[0] = Some(1.0);
        coefs[3] = None;
        let est = AutocorrEstimate::new(xs, coefs, 1, 1).unwrap();
        let mut cfg = AnalysisConfig::default();
        cfg.fit_include_lag0 = false;
        let f = fit_autocorr_model(&est, &cfg).unwrap();
        assert_eq!(f.n_points, 9);
        assert!((f.model.b - 1.05).abs() < 1e-6);
        cfg.fit_include_lag0 = true;
        assert_eq!(fit_autocorr_model(&est, &cfg).unwrap().n_points, 10);
    }

    #[test]
    fn decorrelation_lag() {
        let m = AutocorrModel::new(0.99, 2.05, 0.0).unwrap();
        let (xs, ys) = sampled(&m, 20);
        let mut coefs: Vec<Option<f64>> = ys.into_iter().map(Some).collect();
        coefs[0] = Some(1.0);
        let est = AutocorrEstimate::new(xs, coefs, 1, 1).unwrap();
        assert_eq!(est.first_lag_below(0.05), Some(1.5));
        assert!(est.mse_against(&m, 10) < 1e-3);
    }
}
