use serde::{Deserialize, Serialize};

use crate::error::{ChannelError, Result};

/// Gaussian main-lobe horn model.
///
/// Power gain in dB is `G₀ − 10·log10(e)·4·ln2·((Δaz/HPBW_az)² + (Δel/HPBW_el)²)`,
/// floored at `G₀ + sidelobe_floor_db`. At half a beamwidth off boresight the
/// gain is 3 dB down.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AntennaPattern {
    boresight_gain_dbi: f64,
    hpbw_azimuth_deg: f64,
    hpbw_elevation_deg: f64,
    sidelobe_floor_db: f64,
}

impl AntennaPattern {
    pub const DEFAULT_SIDELOBE_FLOOR_DB: f64 = -30.0;

    pub fn new(boresight_gain_dbi: f64, hpbw_azimuth_deg: f64, hpbw_elevation_deg: f64) -> Result<Self> {
        Self::with_floor(
            boresight_gain_dbi,
            hpbw_azimuth_deg,
            hpbw_elevation_deg,
            Self::DEFAULT_SIDELOBE_FLOOR_DB,
        )
    }

    pub fn with_floor(
        boresight_gain_dbi: f64,
        hpbw_azimuth_deg: f64,
        hpbw_elevation_deg: f64,
        sidelobe_floor_db: f64,
    ) -> Result<Self> {
        if !boresight_gain_dbi.is_finite() {
            return Err(ChannelError::domain("boresight_gain_dbi", boresight_gain_dbi, "finite"));
        }
        for (what, v) in [("hpbw_azimuth", hpbw_azimuth_deg), ("hpbw_elevation", hpbw_elevation_deg)] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(ChannelError::domain(what, v, "> 0 degrees"));
            }
        }
        if !(sidelobe_floor_db <= 0.0) {
            return Err(ChannelError::domain("sidelobe_floor_db", sidelobe_floor_db, "<= 0 dB"));
        }
        Ok(AntennaPattern {
            boresight_gain_dbi,
            hpbw_azimuth_deg,
            hpbw_elevation_deg,
            sidelobe_floor_db,
        })
    }

    /// 15 dBi horn with 28.8° azimuth and 30° elevation half-power beamwidths.
    pub fn horn_15dbi() -> Self {
        AntennaPattern {
            boresight_gain_dbi: 15.0,
            hpbw_azimuth_deg: 28.8,
            hpbw_elevation_deg: 30.0,
            sidelobe_floor_db: Self::DEFAULT_SIDELOBE_FLOOR_DB,
        }
    }

    pub fn boresight_gain_dbi(&self) -> f64 {
        self.boresight_gain_dbi
    }

    pub fn hpbw_azimuth(&self) -> f64 {
        self.hpbw_azimuth_deg
    }

    pub fn hpbw_elevation(&self) -> f64 {
        self.hpbw_elevation_deg
    }

    pub fn gain_db(&self, d_az_deg: f64, d_el_deg: f64) -> f64 {
        let u = (d_az_deg / self.hpbw_azimuth_deg).powi(2) + (d_el_deg / self.hpbw_elevation_deg).powi(2);
        let rolloff_db = -4.0 * std::f64::consts::LN_2 * 10.0 / std::f64::consts::LN_10 * u;
        self.boresight_gain_dbi + rolloff_db.max(self.sidelobe_floor_db)
    }

    /// `|g(Δaz, Δel)|`, linear voltage gain.
    pub fn amplitude_gain(&self, d_az_deg: f64, d_el_deg: f64) -> f64 {
        10f64.powf(self.gain_db(d_az_deg, d_el_deg) / 20.0)
    }

    pub fn max_amplitude_gain(&self) -> f64 {
        10f64.powf(self.boresight_gain_dbi / 20.0)
    }
}
