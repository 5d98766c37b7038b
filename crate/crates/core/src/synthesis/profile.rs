//! Built-in street-canyon tap profile used when no explicit taps are given.

use super::{apply_directional_filter, synthesize_omni_cir, TapSpec};
use crate::channel::{mw_to_dbm, AngleVector, AntennaPattern, ChannelImpulseResponse, BIN_WIDTH_S};

fn angle(az: f64, el: f64) -> AngleVector {
    AngleVector::new(az, el).expect("profile angles are in range")
}

/// Eight omni paths: six inside the beams of the default pointing, two far
/// outside them. Powers are isotropic received powers in dBm.
pub fn default_omni_taps() -> Vec<TapSpec> {
    const ROWS: [(f64, f64, (f64, f64), (f64, f64)); 8] = [
        (-70.0, 0.0, (0.0, -10.0), (180.0, 10.0)),
        (-76.0, 7.5e-9, (4.0, -11.0), (176.0, 12.0)),
        (-78.0, 27.5e-9, (-6.0, -9.0), (186.0, 8.0)),
        (-81.0, 47.5e-9, (7.0, -10.0), (172.0, 11.0)),
        (-84.0, 72.5e-9, (-5.0, -12.0), (188.0, 9.0)),
        (-87.0, 100.0e-9, (3.0, -8.0), (177.0, 13.0)),
        (-100.0, 125.0e-9, (95.0, 0.0), (80.0, 5.0)),
        (-102.0, 160.0e-9, (-120.0, -5.0), (300.0, 0.0)),
    ];
    ROWS.iter()
        .map(|&(p, d, (taz, tel), (raz, rel))| TapSpec {
            mean_power_dbm: p,
            delay_s: d,
            k_db: 0.0,
            aod: angle(taz, tel),
            aoa: angle(raz, rel),
        })
        .collect()
}

/// TX beam 10° below horizon, RX beam facing back toward the TX 10° above it.
pub fn default_pointing() -> (AngleVector, AngleVector) {
    (angle(0.0, -10.0), angle(180.0, 10.0))
}

/// Tap targets from an impulse response: mean power is the tap power, K is `k_db` for all.
pub fn taps_from_cir(cir: &ChannelImpulseResponse, k_db: f64) -> Vec<TapSpec> {
    cir.taps()
        .iter()
        .map(|t| TapSpec {
            mean_power_dbm: mw_to_dbm(t.power()),
            delay_s: t.delay_s(),
            k_db,
            aod: t.aod,
            aoa: t.aoa,
        })
        .collect()
}

/// The omni profile seen through two 15 dBi horns at the default pointing.
pub fn default_directional_taps(noise_floor_dbm: f64) -> Vec<TapSpec> {
    let omni = synthesize_omni_cir(&default_omni_taps(), BIN_WIDTH_S, 0).expect("default profile is valid");
    let horn = AntennaPattern::horn_15dbi();
    let (tx, rx) = default_pointing();
    let dir = apply_directional_filter(&omni, &horn, &horn, tx, rx, noise_floor_dbm)
        .expect("omni input");
    taps_from_cir(&dir, 0.0)
}
