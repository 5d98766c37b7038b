//! Fully resolved run configurations and the manifest that records them.

use std::path::{Path, PathBuf};

use mmwf_core::analysis::AnalysisConfig;
use mmwf_core::channel::{
    bundled_presets, AutocorrModel, Environment, FadingPreset, Polarization, PresetSet, WAVELENGTH_M,
};
use mmwf_core::persistence::load_presets;
use mmwf_core::rng::domain_seed;
use mmwf_core::synthesis::{default_directional_taps, CorrelationMapping, MappingMode, MappingTable, TapSpec, TrackConfig};
use serde::{Deserialize, Serialize};

use crate::args::{AnalyzeArgs, GeometryArgs, RoundtripArgs, SimulateArgs};
use crate::CliError;

pub const DEFAULT_SEED: u64 = 28;
pub const MANIFEST_FORMAT_VERSION: &str = "mmwf-manifest-1";
pub const MANIFEST_FILE: &str = "manifest.json";
pub const PRESET_PATH_ENV: &str = "MMWF_PRESET_PATH";
/// Autocorrelation level that defines the decorrelation distance.
pub const DECORRELATION_THRESHOLD: f64 = 0.05;
/// Ensemble size the round-trip tolerances are calibrated for.
pub const ACCEPTANCE_TRACKS: usize = 200;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Geometry {
    pub n_positions: usize,
    pub step_mm: f64,
    pub wavelength_m: f64,
    pub bin_ns: f64,
    pub noise_floor_dbm: f64,
}

impl Geometry {
    pub fn track_config(&self, seed: u64) -> TrackConfig {
        TrackConfig {
            n_positions: self.n_positions,
            step_m: self.step_mm / 1000.0,
            wavelength_m: self.wavelength_m,
            bin_width_s: self.bin_ns / 1e9,
            noise_floor_dbm: self.noise_floor_dbm,
            seed,
        }
    }

    fn from_args(g: &GeometryArgs) -> Result<Self, CliError> {
        let geometry = Geometry {
            n_positions: g.positions,
            step_mm: g.step_mm,
            wavelength_m: WAVELENGTH_M,
            bin_ns: g.bin_ns,
            noise_floor_dbm: g.noise_floor_dbm,
        };
        geometry
            .track_config(0)
            .validate()
            .map_err(|e| CliError::Usage(e.to_string()))?;
        Ok(geometry)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Mapping {
    pub mode: MappingMode,
    /// Paired draws per table point; used only by the calibrated mode.
    pub draws: usize,
}

impl Mapping {
    fn new(calibrated: bool) -> Self {
        Mapping {
            mode: if calibrated { MappingMode::Calibrated } else { MappingMode::Analytic },
            draws: MappingTable::DEFAULT_DRAWS,
        }
    }

    pub fn build(&self, seed: u64) -> CorrelationMapping {
        CorrelationMapping::for_mode(self.mode, self.draws, domain_seed(seed, "mapping-table"))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimulateConfig {
    pub preset: Option<String>,
    pub environment: Option<Environment>,
    pub polarization: Option<Polarization>,
    pub k_range_db: [f64; 2],
    pub autocorr: AutocorrModel,
    pub tracks: usize,
    pub seed: u64,
    pub geometry: Geometry,
    pub mapping: Mapping,
    pub taps: Vec<TapSpec>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnalyzeConfig {
    pub inputs: Vec<PathBuf>,
    pub analysis: AnalysisConfig,
    pub per_track: bool,
    pub decorrelation_threshold: f64,
}

/// Pass limits for one preset round trip.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Tolerances {
    /// Largest vertical distance of the empirical CDF outside the preset's K band.
    pub bracket_cdf: f64,
    /// Upper bound (exclusive) on the estimate-vs-preset MSE.
    pub autocorr_mse: f64,
    pub a: f64,
    pub b: f64,
    pub c: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            bracket_cdf: 0.02,
            autocorr_mse: 0.01,
            a: 0.05,
            b: 0.25,
            c: 0.05,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RoundtripConfig {
    pub presets: Vec<FadingPreset>,
    pub tracks: usize,
    pub seed: u64,
    pub geometry: Geometry,
    pub mapping: Mapping,
    pub analysis: AnalysisConfig,
    pub decorrelation_threshold: f64,
    pub tolerances: Tolerances,
    pub write_tracks: bool,
    pub taps: Vec<TapSpec>,
}

impl RoundtripConfig {
    /// Bundled presets, default geometry and analysis, no track output.
    pub fn defaults(presets: Vec<FadingPreset>, tracks: usize, seed: u64) -> Self {
        let geometry = Geometry {
            n_positions: mmwf_core::channel::TRACK_POSITIONS,
            step_mm: 5.35,
            wavelength_m: WAVELENGTH_M,
            bin_ns: 2.5,
            noise_floor_dbm: -100.0,
        };
        RoundtripConfig {
            presets,
            tracks,
            seed,
            geometry,
            mapping: Mapping::new(false),
            analysis: AnalysisConfig::default(),
            decorrelation_threshold: DECORRELATION_THRESHOLD,
            tolerances: Tolerances::default(),
            write_tracks: false,
            taps: default_directional_taps(geometry.noise_floor_dbm),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "subcommand", rename_all = "kebab-case")]
pub enum RunConfig {
    Simulate(SimulateConfig),
    Analyze(AnalyzeConfig),
    Roundtrip(RoundtripConfig),
}

/// Written next to every run's outputs; replaying it reproduces them byte for byte.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub format_version: String,
    pub tool_version: String,
    #[serde(flatten)]
    pub config: RunConfig,
    /// Paths relative to the output directory, sorted.
    pub outputs: Vec<String>,
}

impl RunManifest {
    pub fn new(config: RunConfig, mut outputs: Vec<String>) -> Self {
        outputs.sort();
        RunManifest {
            format_version: MANIFEST_FORMAT_VERSION.to_string(),
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
            config,
            outputs,
        }
    }

    pub fn to_json(&self) -> String {
        let mut text = serde_json::to_string_pretty(self).expect("manifests always serialize");
        text.push('\n');
        text
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        let manifest: RunManifest =
            serde_json::from_str(&text).map_err(|e| CliError::Data(format!("{}: {e}", path.display())))?;
        if manifest.format_version != MANIFEST_FORMAT_VERSION {
            return Err(CliError::Data(format!(
                "{}: unsupported format_version `{}` (expected `{MANIFEST_FORMAT_VERSION}`)",
                path.display(),
                manifest.format_version
            )));
        }
        Ok(manifest)
    }
}

/// The bundled presets, or the file named by `MMWF_PRESET_PATH`.
pub fn preset_set() -> Result<PresetSet, CliError> {
    match std::env::var_os(PRESET_PATH_ENV) {
        Some(path) if !path.is_empty() => {
            let path = PathBuf::from(path);
            load_presets(&path).map_err(|e| CliError::Data(format!("{PRESET_PATH_ENV}={}: {e}", path.display())))
        }
        _ => Ok(bundled_presets().clone()),
    }
}

fn find_preset<'a>(set: &'a PresetSet, name: &str) -> Result<&'a FadingPreset, CliError> {
    set.by_name(name).ok_or_else(|| {
        let names: Vec<&str> = set.presets.iter().map(|p| p.name.as_str()).collect();
        CliError::Usage(format!("unknown preset `{name}` (available: {})", names.join(", ")))
    })
}

fn pair(values: &[f64], flag: &str, n: usize) -> Result<Vec<f64>, CliError> {
    if values.len() != n || values.iter().any(|v| !v.is_finite()) {
        return Err(CliError::Usage(format!(
            "--{flag} takes {n} comma-separated finite numbers, got {values:?}"
        )));
    }
    Ok(values.to_vec())
}

pub fn resolve_simulate(args: &SimulateArgs) -> Result<SimulateConfig, CliError> {
    let geometry = Geometry::from_args(&args.geometry)?;
    if args.tracks == 0 {
        return Err(CliError::Usage("--tracks must be at least 1".into()));
    }
    let (preset, environment, polarization, k_range_db, autocorr) = match (&args.preset, &args.k_range_db, &args.autocorr) {
        (Some(name), None, None) => {
            let set = preset_set()?;
            let p = find_preset(&set, name)?;
            (Some(p.name.clone()), Some(p.environment), Some(p.polarization), p.k_range_db, p.autocorr)
        }
        (None, Some(k), Some(m)) => {
            let k = pair(k, "k-range-db", 2)?;
            let m = pair(m, "autocorr", 3)?;
            if k[0] > k[1] {
                return Err(CliError::Usage(format!("--k-range-db low {} exceeds high {}", k[0], k[1])));
            }
            let model = AutocorrModel::new(m[0], m[1], m[2]).map_err(|e| CliError::Usage(format!("--autocorr: {e}")))?;
            (None, None, None, [k[0], k[1]], model)
        }
        _ => {
            return Err(CliError::Usage(
                "give either --preset or both --k-range-db and --autocorr".into(),
            ))
        }
    };
    Ok(SimulateConfig {
        preset,
        environment,
        polarization,
        k_range_db,
        autocorr,
        tracks: args.tracks,
        seed: args.seed,
        geometry,
        mapping: Mapping::new(args.calibrated_mapping),
        taps: default_directional_taps(geometry.noise_floor_dbm),
    })
}

fn expand_inputs(inputs: &[PathBuf]) -> Result<Vec<PathBuf>, CliError> {
    let mut files = Vec::new();
    for input in inputs {
        if input.is_dir() {
            let entries = std::fs::read_dir(input).map_err(|e| CliError::io(input, e))?;
            let mut found = Vec::new();
            for entry in entries {
                let path = entry.map_err(|e| CliError::io(input, e))?.path();
                let name = path.file_name().and_then(|n| n.to_str()).unwrap_or("");
                if path.is_file() && name.starts_with("track_") && name.ends_with(".csv") {
                    found.push(path);
                }
            }
            if found.is_empty() {
                return Err(CliError::Data(format!("{}: no track_*.csv files", input.display())));
            }
            found.sort();
            files.extend(found);
        } else if input.is_file() {
            files.push(input.clone());
        } else {
            return Err(CliError::Data(format!("{}: no such file or directory", input.display())));
        }
    }
    Ok(files)
}

pub fn resolve_analyze(args: &AnalyzeArgs) -> Result<AnalyzeConfig, CliError> {
    if !(args.threshold_db.is_finite() && args.threshold_db >= 0.0) {
        return Err(CliError::Usage(format!("--threshold-db must be >= 0, got {}", args.threshold_db)));
    }
    if !(0.0..=1.0).contains(&args.min_occupancy) {
        return Err(CliError::Usage(format!("--min-occupancy must lie in [0, 1], got {}", args.min_occupancy)));
    }
    let analysis = AnalysisConfig {
        threshold_db: args.threshold_db,
        min_occupancy: args.min_occupancy,
        pooling: args.pooling.into(),
        ..AnalysisConfig::default()
    };
    Ok(AnalyzeConfig {
        inputs: expand_inputs(&args.inputs)?,
        analysis,
        per_track: args.per_track,
        decorrelation_threshold: DECORRELATION_THRESHOLD,
    })
}

pub fn resolve_roundtrip(args: &RoundtripArgs) -> Result<RoundtripConfig, CliError> {
    let geometry = Geometry::from_args(&args.geometry)?;
    if args.tracks == 0 {
        return Err(CliError::Usage("--tracks must be at least 1".into()));
    }
    let set = preset_set()?;
    let presets = match &args.preset {
        Some(name) => vec![find_preset(&set, name)?.clone()],
        None => set.presets.clone(),
    };
    Ok(RoundtripConfig {
        presets,
        tracks: args.tracks,
        seed: args.seed,
        geometry,
        mapping: Mapping::new(args.calibrated_mapping),
        analysis: AnalysisConfig {
            pooling: args.pooling.into(),
            ..AnalysisConfig::default()
        },
        decorrelation_threshold: DECORRELATION_THRESHOLD,
        tolerances: Tolerances::default(),
        write_tracks: args.write_tracks,
        taps: default_directional_taps(geometry.noise_floor_dbm),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use clap::Parser;

    use crate::args::{Cli, Command};

    fn simulate(argv: &[&str]) -> Result<SimulateConfig, CliError> {
        let cli = Cli::try_parse_from(argv).unwrap();
        match cli.command {
            Command::Simulate(a) => resolve_simulate(&a),
            _ => unreachable!(),
        }
    }

    #[test]
    fn default_step_recorded_in_millimetres() {
        let cfg = simulate(&["mmwf", "simulate", "--preset", "los-vv", "--out-dir", "x"]).unwrap();
        assert_eq!(cfg.geometry.step_mm, 5.35);
        assert_eq!(cfg.geometry.n_positions, 66);
        assert_eq!(cfg.seed, DEFAULT_SEED);
    }

    #[test]
    fn nlos_vh_preset_parameters() {
        let cfg = simulate(&["mmwf", "simulate", "--preset", "nlos-vh", "--out-dir", "x"]).unwrap();
        assert_eq!(cfg.k_range_db, [3.0, 7.0]);
        assert_eq!(cfg.autocorr, AutocorrModel::new(1.0, 1.9, 0.0).unwrap());
    }

    #[test]
    fn explicit_parameters_accept_negative_values() {
        let cfg = simulate(&[
            "mmwf", "simulate", "--k-range-db", "-2,4", "--autocorr", "0.9,1.05,-0.1", "--out-dir", "x",
        ])
        .unwrap();
        assert_eq!(cfg.k_range_db, [-2.0, 4.0]);
        assert_eq!(cfg.autocorr.c, -0.1);
        assert_eq!(cfg.preset, None);
    }

    #[test]
    fn unknown_preset_lists_names() {
        let err = simulate(&["mmwf", "simulate", "--preset", "los-hh", "--out-dir", "x"]).unwrap_err();
        assert!(matches!(&err, CliError::Usage(m) if m.contains("los-vv")), "{err}");
    }

    #[test]
    fn manifest_round_trips() {
        let cfg = simulate(&["mmwf", "simulate", "--preset", "los-vv", "--out-dir", "x"]).unwrap();
        let m = RunManifest::new(RunConfig::Simulate(cfg), vec!["b".into(), "a".into()]);
        let text = m.to_json();
        assert!(text.contains("\"subcommand\": \"simulate\""));
        assert!(text.contains("\"seed\": 28"));
        assert_eq!(m.outputs, ["a", "b"]);
        let back: RunManifest = serde_json::from_str(&text).unwrap();
        assert_eq!(back, m);
        assert_eq!(back.to_json(), text);
    }
}
