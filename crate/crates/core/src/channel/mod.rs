//! Domain types and pure evaluators shared by synthesis and analysis.
//!
//! A channel is a tap-delay line of resolvable multipath components, each
//! carrying a complex voltage amplitude, an excess delay, and the departure
//! and arrival directions. Directional channels additionally record the
//! fixed TX/RX beam pointing used to weight each tap by the antenna patterns.

mod antenna;
pub mod bessel;
mod distributions;
mod model;
mod presets;
mod track;

use std::f64::consts::TAU;

use serde::{Deserialize, Serialize};

use crate::error::{ChannelError, Result};

pub use antenna::AntennaPattern;
pub use distributions::{
    lognormal_cdf, lognormal_pdf, rayleigh_cdf, rayleigh_pdf, rician_cdf, rician_k_db,
    rician_pdf, LognormalParams, RayleighParams, RicianCdf, RicianParams,
};
pub use model::{autocorr_model_eval, AutocorrModel};
pub use presets::{
    bundled_presets, parse_presets, preset_lookup, Environment, FadingPreset, Polarization,
    PresetSet, BUNDLED_PRESETS_TOML,
};
pub use track::{SpatialTrackPdp, TrackGeometry, TrackLabels};

/// Speed of light in vacuum, m/s.
pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;
/// Carrier frequency of the measurement campaign, Hz.
pub const CARRIER_HZ: f64 = 28.0e9;
/// Free-space wavelength at the carrier, about 10.71 mm.
pub const WAVELENGTH_M: f64 = SPEED_OF_LIGHT / CARRIER_HZ;
/// Track increment: half a wavelength, as measured (5.35 mm).
pub const TRACK_STEP_M: f64 = 5.35e-3;
/// Number of track positions (PDPs) per local area.
pub const TRACK_POSITIONS: usize = 66;
/// Multipath time resolution of the sounder.
pub const BIN_WIDTH_S: f64 = 2.5e-9;

/// Converts a distance in meters to wavelengths at `wavelength_m`.
pub fn meters_to_wavelengths(d_m: f64, wavelength_m: f64) -> f64 {
    d_m / wavelength_m
}

pub fn wavelengths_to_meters(d_wl: f64, wavelength_m: f64) -> f64 {
    d_wl * wavelength_m
}

pub fn dbm_to_mw(dbm: f64) -> f64 {
    10f64.powf(dbm / 10.0)
}

pub fn mw_to_dbm(mw: f64) -> f64 {
    10.0 * mw.log10()
}

/// Azimuth/elevation pair in degrees.
///
/// Azimuth is wrapped into `[0, 360)` at construction; elevation must lie in
/// `[-90, 90]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AngleVector {
    azimuth_deg: f64,
    elevation_deg: f64,
}

impl AngleVector {
    pub fn new(azimuth_deg: f64, elevation_deg: f64) -> Result<Self> {
        if !azimuth_deg.is_finite() {
            return Err(ChannelError::domain("azimuth", azimuth_deg, "finite"));
        }
        if !(-90.0..=90.0).contains(&elevation_deg) {
            return Err(ChannelError::domain(
                "elevation",
                elevation_deg,
                "[-90, 90] degrees",
            ));
        }
        let mut az = azimuth_deg.rem_euclid(360.0);
        // rem_euclid can round up to exactly 360 for tiny negative inputs
        if az >= 360.0 {
            az = 0.0;
        }
        Ok(AngleVector {
            azimuth_deg: az,
            elevation_deg,
        })
    }

    pub fn boresight() -> Self {
        AngleVector {
            azimuth_deg: 0.0,
            elevation_deg: 0.0,
        }
    }

    pub fn azimuth(&self) -> f64 {
        self.azimuth_deg
    }

    pub fn elevation(&self) -> f64 {
        self.elevation_deg
    }

    /// Angular offset `(Δaz, Δel)` of `self` relative to `pointing`, with the
    /// azimuth difference wrapped into `(-180, 180]`.
    pub fn offset_from(&self, pointing: &AngleVector) -> (f64, f64) {
        let mut daz = (self.azimuth_deg - pointing.azimuth_deg).rem_euclid(360.0);
        if daz > 180.0 {
            daz -= 360.0;
        }
        (daz, self.elevation_deg - pointing.elevation_deg)
    }
}

/// One resolvable multipath tap.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MultipathComponent {
    amplitude: f64,
    phase: f64,
    delay_s: f64,
    pub aod: AngleVector,
    pub aoa: AngleVector,
}

impl MultipathComponent {
    pub fn new(
        amplitude: f64,
        phase: f64,
        delay_s: f64,
        aod: AngleVector,
        aoa: AngleVector,
    ) -> Result<Self> {
        if !(amplitude >= 0.0 && amplitude.is_finite()) {
            return Err(ChannelError::domain("amplitude", amplitude, ">= 0"));
        }
        if !(delay_s >= 0.0 && delay_s.is_finite()) {
            return Err(ChannelError::domain("delay", delay_s, ">= 0 s"));
        }
        if !phase.is_finite() {
            return Err(ChannelError::domain("phase", phase, "finite"));
        }
        let mut phase = phase.rem_euclid(TAU);
        if phase >= TAU {
            phase = 0.0;
        }
        Ok(MultipathComponent {
            amplitude,
            phase,
            delay_s,
            aod,
            aoa,
        })
    }

    /// Linear voltage gain `a_k`.
    pub fn amplitude(&self) -> f64 {
        self.amplitude
    }

    /// Phase in `[0, 2π)`.
    pub fn phase(&self) -> f64 {
        self.phase
    }

    pub fn delay_s(&self) -> f64 {
        self.delay_s
    }

    /// `a_k²` in linear power units.
    pub fn power(&self) -> f64 {
        self.amplitude * self.amplitude
    }

    pub(crate) fn with_amplitude(mut self, amplitude: f64) -> Self {
        self.amplitude = amplitude;
        self
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum CirKind {
    Omni,
    Directional {
        tx_pointing: AngleVector,
        rx_pointing: AngleVector,
    },
}

/// Tap-delay-line channel impulse response, taps ascending in delay.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChannelImpulseResponse {
    taps: Vec<MultipathComponent>,
    kind: CirKind,
}

impl ChannelImpulseResponse {
    pub fn new(mut taps: Vec<MultipathComponent>, kind: CirKind) -> Self {
        taps.sort_by(|a, b| a.delay_s.total_cmp(&b.delay_s));
        ChannelImpulseResponse { taps, kind }
    }

    pub fn taps(&self) -> &[MultipathComponent] {
        &self.taps
    }

    pub fn kind(&self) -> CirKind {
        self.kind
    }

    pub fn is_omni(&self) -> bool {
        matches!(self.kind, CirKind::Omni)
    }

    pub fn len(&self) -> usize {
        self.taps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.taps.is_empty()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn azimuth_wraps_into_range() {
        let a = AngleVector::new(-90.0, 10.0).unwrap();
        assert_eq!(a.azimuth(), 270.0);
        let b = AngleVector::new(725.0, 0.0).unwrap();
        assert!((b.azimuth() - 5.0).abs() < 1e-12);
        let c = AngleVector::new(-1e-20, 0.0).unwrap();
        assert!(c.azimuth() < 360.0);
    }

    #[test]
    fn elevation_out_of_range_rejected() {
        assert!(AngleVector::new(0.0, 90.5).is_err());
        assert!(AngleVector::new(0.0, -91.0).is_err());
        assert!(AngleVector::new(0.0, 90.0).is_ok());
    }

    #[test]
    fn offset_wraps_through_zero() {
        let tap = AngleVector::new(350.0, 5.0).unwrap();
        let point = AngleVector::new(10.0, -5.0).unwrap();
        let (daz, del) = tap.offset_from(&point);
        assert!((daz + 20.0).abs() < 1e-12);
        assert!((del - 10.0).abs() < 1e-12);
    }

    #[test]
    fn component_validation() {
        let z = AngleVector::boresight();
        assert!(MultipathComponent::new(-1.0, 0.0, 0.0, z, z).is_err());
        assert!(MultipathComponent::new(1.0, 0.0, -1e-9, z, z).is_err());
        let c = MultipathComponent::new(1.0, -std::f64::consts::FRAC_PI_2, 0.0, z, z).unwrap();
        assert!((c.phase() - 1.5 * std::f64::consts::PI).abs() < 1e-12);
    }

    #[test]
    fn cir_sorts_taps_by_delay() {
        let z = AngleVector::boresight();
        let taps = vec![
            MultipathComponent::new(1.0, 0.0, 5e-9, z, z).unwrap(),
            MultipathComponent::new(1.0, 0.0, 1e-9, z, z).unwrap(),
        ];
        let cir = ChannelImpulseResponse::new(taps, CirKind::Omni);
        assert_eq!(cir.taps()[0].delay_s(), 1e-9);
    }

    #[test]
    fn wavelength_is_about_10_71_mm() {
        assert!((WAVELENGTH_M - 1.0707e-2).abs() < 1e-6);
        assert!((meters_to_wavelengths(TRACK_STEP_M, WAVELENGTH_M) - 0.5).abs() < 1e-3);
    }

    #[test]
    fn dbm_conversion_round_trip() {
        for &dbm in &[-130.0, -100.0, -57.123456, 0.0, 27.0] {
            let back = mw_to_dbm(dbm_to_mw(dbm));
            assert!((back - dbm).abs() <= 1e-12 * dbm.abs().max(1.0));
        }
    }
}
