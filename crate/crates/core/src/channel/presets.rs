//! Environment × polarization fading presets (K-factor bracket plus
//! autocorrelation model), bundled as a TOML data file.

use std::fmt;
use std::str::FromStr;
use std::sync::OnceLock;

use serde::{Deserialize, Serialize};

use super::model::AutocorrModel;
use crate::error::{ChannelError, Result};

pub const BUNDLED_PRESETS_TOML: &str = include_str!("../../data/presets.toml");
pub const PRESET_FORMAT_VERSION: &str = "mmwf-presets-1";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Environment {
    #[serde(rename = "LOS")]
    Los,
    #[serde(rename = "NLOS")]
    Nlos,
    #[serde(rename = "LOS-to-NLOS")]
    LosToNlos,
}

impl Environment {
    pub const ALL: [Environment; 3] = [Environment::Los, Environment::Nlos, Environment::LosToNlos];

    pub fn label(&self) -> &'static str {
        match self {
            Environment::Los => "LOS",
            Environment::Nlos => "NLOS",
            Environment::LosToNlos => "LOS-to-NLOS",
        }
    }

    fn slug(&self) -> &'static str {
        match self {
            Environment::Los => "los",
            Environment::Nlos => "nlos",
            Environment::LosToNlos => "los-to-nlos",
        }
    }
}

impl fmt::Display for Environment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

impl FromStr for Environment {
    type Err = ChannelError;

    fn from_str(s: &str) -> Result<Self> {
        Environment::ALL
            .into_iter()
            .find(|e| e.label().eq_ignore_ascii_case(s))
            .ok_or_else(|| ChannelError::InvalidParameter(format!("unknown environment `{s}`")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Polarization {
    VV,
    VH,
}

impl Polarization {
    pub const ALL: [Polarization; 2] = [Polarization::VV, Polarization::VH];

    pub fn label(&self) -> &'static str {
        match self {
            Polarization::VV => "VV",
            Polarization::VH => "VH",
        }
    }
}

impl fmt::Display for Polarization {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

impl FromStr for Polarization {
    type Err = ChannelError;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_uppercase().replace('-', "").as_str() {
            "VV" => Ok(Polarization::VV),
            "VH" => Ok(Polarization::VH),
            _ => Err(ChannelError::InvalidParameter(format!("unknown polarization `{s}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FadingPreset {
    pub name: String,
    pub environment: Environment,
    pub polarization: Polarization,
    pub k_range_db: [f64; 2],
    pub autocorr: AutocorrModel,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

impl FadingPreset {
    pub fn canonical_name(environment: Environment, polarization: Polarization) -> String {
        format!("{}-{}", environment.slug(), polarization.label().to_ascii_lowercase())
    }

    pub fn k_low_db(&self) -> f64 {
        self.k_range_db[0]
    }

    pub fn k_high_db(&self) -> f64 {
        self.k_range_db[1]
    }

    fn validate(&self) -> Result<()> {
        let [lo, hi] = self.k_range_db;
        if !(lo.is_finite() && hi.is_finite() && lo <= hi) {
            return Err(ChannelError::InvalidParameter(format!(
                "preset `{}`: K range [{lo}, {hi}] must be finite with low <= high",
                self.name
            )));
        }
        let m = self.autocorr;
        AutocorrModel::new(m.a, m.b, m.c).map_err(|e| {
            ChannelError::InvalidParameter(format!("preset `{}`: {e}", self.name))
        })?;
        Ok(())
    }
}

/// The full 3 × 2 grid of presets.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PresetSet {
    pub format_version: String,
    #[serde(rename = "preset")]
    pub presets: Vec<FadingPreset>,
}

impl PresetSet {
    pub fn lookup(&self, environment: Environment, polarization: Polarization) -> &FadingPreset {
        self.presets
            .iter()
            .find(|p| p.environment == environment && p.polarization == polarization)
            .expect("validated preset sets cover the whole grid")
    }

    pub fn by_name(&self, name: &str) -> Option<&FadingPreset> {
        self.presets.iter().find(|p| p.name.eq_ignore_ascii_case(name))
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("preset sets always serialize")
    }

    fn validate(&self) -> Result<()> {
        if self.format_version != PRESET_FORMAT_VERSION {
            return Err(ChannelError::InvalidParameter(format!(
                "preset file format_version `{}` (expected `{PRESET_FORMAT_VERSION}`)",
                self.format_version
            )));
        }
        if self.presets.len() != 6 {
            return Err(ChannelError::InvalidParameter(format!(
                "preset file holds {} presets, expected 6",
                self.presets.len()
            )));
        }
        for env in Environment::ALL {
            for pol in Polarization::ALL {
                let n = self
                    .presets
                    .iter()
                    .filter(|p| p.environment == env && p.polarization == pol)
                    .count();
                if n != 1 {
                    return Err(ChannelError::InvalidParameter(format!(
                        "preset file has {n} entries for {env} {pol}, expected exactly 1"
                    )));
                }
            }
        }
        for p in &self.presets {
            p.validate()?;
        }
        Ok(())
    }
}

/// Parses and validates a preset file.
pub fn parse_presets(text: &str) -> Result<PresetSet> {
    let set: PresetSet = toml::from_str(text)
        .map_err(|e| ChannelError::InvalidParameter(format!("preset file: {e}")))?;
    set.validate()?;
    Ok(set)
}

pub fn bundled_presets() -> &'static PresetSet {
    static SET: OnceLock<PresetSet> = OnceLock::new();
    SET.get_or_init(|| parse_presets(BUNDLED_PRESETS_TOML).expect("bundled preset file is valid"))
}

pub fn preset_lookup(environment: Environment, polarization: Polarization) -> FadingPreset {
    bundled_presets().lookup(environment, polarization).clone()
}
