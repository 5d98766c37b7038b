use serde::{Deserialize, Serialize};

use super::presets::{Environment, Polarization};
use super::{dbm_to_mw, BIN_WIDTH_S, TRACK_STEP_M, WAVELENGTH_M};
use crate::error::{ChannelError, Result};

/// Physical layout shared by every PDP on a track.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrackGeometry {
    pub step_m: f64,
    pub wavelength_m: f64,
    pub bin_width_s: f64,
    pub noise_floor_dbm: f64,
}

impl Default for TrackGeometry {
    fn default() -> Self {
        TrackGeometry {
            step_m: TRACK_STEP_M,
            wavelength_m: WAVELENGTH_M,
            bin_width_s: BIN_WIDTH_S,
            noise_floor_dbm: -100.0,
        }
    }
}

impl TrackGeometry {
    pub fn validate(&self) -> Result<()> {
        for (what, v) in [
            ("step_m", self.step_m),
            ("wavelength_m", self.wavelength_m),
            ("bin_width_s", self.bin_width_s),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(ChannelError::domain(what, v, "> 0"));
            }
        }
        if !self.noise_floor_dbm.is_finite() {
            return Err(ChannelError::domain("noise_floor_dbm", self.noise_floor_dbm, "finite"));
        }
        Ok(())
    }

    /// Separation of `lag` track steps, in wavelengths.
    pub fn lag_wavelengths(&self, lag: usize) -> f64 {
        lag as f64 * self.step_m / self.wavelength_m
    }
}

/// Optional provenance carried in track file headers.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct TrackLabels {
    pub environment: Option<Environment>,
    pub polarization: Option<Polarization>,
    pub seed: Option<u64>,
}

/// Binned path powers over a linear track, indexed by (position, delay bin).
///
/// Below-noise entries hold linear 0 with their validity bit cleared; every
/// valid entry is strictly above the noise floor.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpatialTrackPdp {
    geometry: TrackGeometry,
    labels: TrackLabels,
    n_positions: usize,
    n_bins: usize,
    powers_mw: Vec<f64>,
    valid: Vec<bool>,
}

impl SpatialTrackPdp {
    /// Builds a track from row-major cells, `None` marking below-floor entries.
    pub fn from_cells(
        geometry: TrackGeometry,
        labels: TrackLabels,
        n_positions: usize,
        n_bins: usize,
        cells: &[Option<f64>],
    ) -> Result<Self> {
        Self::check_shape(&geometry, n_positions, n_bins, cells.len())?;
        let floor = geometry.noise_floor_mw();
        let mut powers_mw = Vec::with_capacity(cells.len());
        let mut valid = Vec::with_capacity(cells.len());
        for (i, cell) in cells.iter().enumerate() {
            match *cell {
                Some(p) => {
                    if !(p.is_finite() && p > floor) {
                        return Err(ChannelError::InvalidParameter(format!(
                            "cell (position {}, bin {}) = {p} mW is not above the noise floor {floor} mW",
                            i / n_bins,
                            i % n_bins
                        )));
                    }
                    powers_mw.push(p);
                    valid.push(true);
                }
                None => {
                    powers_mw.push(0.0);
                    valid.push(false);
                }
            }
        }
        Ok(SpatialTrackPdp {
            geometry,
            labels,
            n_positions,
            n_bins,
            powers_mw,
            valid,
        })
    }

    /// Builds a track from raw row-major powers; anything at or below the
    /// noise floor (or non-finite) becomes the sentinel.
    pub fn from_powers(
        geometry: TrackGeometry,
        labels: TrackLabels,
        n_positions: usize,
        n_bins: usize,
        powers_mw: &[f64],
    ) -> Result<Self> {
        Self::check_shape(&geometry, n_positions, n_bins, powers_mw.len())?;
        let floor = geometry.noise_floor_mw();
        let cells: Vec<Option<f64>> = powers_mw
            .iter()
            .map(|&p| (p.is_finite() && p > floor).then_some(p))
            .collect();
        Self::from_cells(geometry, labels, n_positions, n_bins, &cells)
    }

    fn check_shape(geometry: &TrackGeometry, n_positions: usize, n_bins: usize, len: usize) -> Result<()> {
        geometry.validate()?;
        if n_positions < 2 {
            return Err(ChannelError::InvalidParameter(format!(
                "a track needs at least 2 positions, got {n_positions}"
            )));
        }
        if n_bins == 0 {
            return Err(ChannelError::InvalidParameter("a track needs at least one delay bin".into()));
        }
        if len != n_positions * n_bins {
            return Err(ChannelError::InvalidParameter(format!(
                "{len} cells for a {n_positions} x {n_bins} track"
            )));
        }
        Ok(())
    }

    pub fn geometry(&self) -> &TrackGeometry {
        &self.geometry
    }

    pub fn labels(&self) -> &TrackLabels {
        &self.labels
    }

    pub fn set_labels(&mut self, labels: TrackLabels) {
        self.labels = labels;
    }

    pub fn n_positions(&self) -> usize {
        self.n_positions
    }

    pub fn n_bins(&self) -> usize {
        self.n_bins
    }

    pub fn step_m(&self) -> f64 {
        self.geometry.step_m
    }

    pub fn bin_width_s(&self) -> f64 {
        self.geometry.bin_width_s
    }

    pub fn noise_floor_mw(&self) -> f64 {
        self.geometry.noise_floor_mw()
    }

    pub fn power(&self, position: usize, bin: usize) -> Option<f64> {
        let i = position * self.n_bins + bin;
        self.valid[i].then_some(self.powers_mw[i])
    }

    /// Row-major linear powers; sentinel cells hold 0.
    pub fn powers_mw(&self) -> &[f64] {
        &self.powers_mw
    }

    pub fn valid_mask(&self) -> &[bool] {
        &self.valid
    }

    pub fn cells(&self) -> Vec<Option<f64>> {
        self.powers_mw
            .iter()
            .zip(&self.valid)
            .map(|(&p, &v)| v.then_some(p))
            .collect()
    }

    pub fn row(&self, position: usize) -> Vec<Option<f64>> {
        (0..self.n_bins).map(|b| self.power(position, b)).collect()
    }

    /// Power sequence of one delay bin along the track.
    pub fn bin_sequence(&self, bin: usize) -> Vec<Option<f64>> {
        (0..self.n_positions).map(|l| self.power(l, bin)).collect()
    }

    /// Same track with every power (and the noise floor) multiplied by `factor`.
    pub fn scaled(&self, factor: f64) -> Result<Self> {
        if !(factor > 0.0 && factor.is_finite()) {
            return Err(ChannelError::domain("scale factor", factor, "> 0"));
        }
        let mut out = self.clone();
        out.geometry.noise_floor_dbm += 10.0 * factor.log10();
        for (p, &v) in out.powers_mw.iter_mut().zip(&self.valid) {
            if v {
                *p *= factor;
            }
        }
        Ok(out)
    }
}

impl TrackGeometry {
    pub fn noise_floor_mw(&self) -> f64 {
        dbm_to_mw(self.noise_floor_dbm)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_match_measurement_geometry() {
        let g = TrackGeometry::default();
        assert_eq!(g.step_m, 5.35e-3);
        assert_eq!(g.bin_width_s, 2.5e-9);
        assert!((g.lag_wavelengths(1) - 0.4997).abs() < 1e-3);
        assert_eq!(super::super::TRACK_POSITIONS, 66);
    }

    #[test]
    fn below_floor_cells_are_rejected() {
        let g = TrackGeometry::default();
        let err = SpatialTrackPdp::from_cells(g, TrackLabels::default(), 2, 1, &[Some(1e-3), Some(1e-12)]);
        assert!(err.is_err());
    }

    #[test]
    fn from_powers_sets_sentinels() {
        let g = TrackGeometry::default();
        let t = SpatialTrackPdp::from_powers(g, TrackLabels::default(), 2, 2, &[1e-3, 0.0, 1e-11, 2e-3]).unwrap();
        assert_eq!(t.power(0, 0), Some(1e-3));
        assert_eq!(t.power(0, 1), None);
        assert_eq!(t.power(1, 0), None);
        assert_eq!(t.powers_mw()[2], 0.0);
        assert_eq!(t.bin_sequence(1), vec![None, Some(2e-3)]);
    }

    #[test]
    fn shape_checks() {
        let g = TrackGeometry::default();
        assert!(SpatialTrackPdp::from_powers(g, TrackLabels::default(), 1, 1, &[1.0]).is_err());
        assert!(SpatialTrackPdp::from_powers(g, TrackLabels::default(), 2, 2, &[1.0; 3]).is_err());
        let bad = TrackGeometry { step_m: 0.0, ..g };
        assert!(SpatialTrackPdp::from_powers(bad, TrackLabels::default(), 2, 1, &[1.0; 2]).is_err());
    }
}
