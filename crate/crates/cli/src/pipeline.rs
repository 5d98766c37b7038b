//! The work behind each subcommand, independent of argument parsing.

use std::io::Write;
use std::path::{Path, PathBuf};

use mmwf_core::analysis::{
    bracket_check, build_fit_report, ensemble_autocorrelation, extract_pooled_samples, fit_autocorr_model,
    AnalysisConfig, BracketCheck, EmpiricalCdf, FadingSampleSet,
};
use mmwf_core::channel::FadingPreset;
use mmwf_core::persistence::{load_track, AnalysisReport, ModelCurve, PlotData};
use mmwf_core::rng::domain_seed;
use mmwf_core::synthesis::{synthesize_ensemble_track, SynthesizedTrack};
use mmwf_core::{AnalysisError, SpatialTrackPdp};
use rayon::prelude::*;

use crate::config::{AnalyzeConfig, RoundtripConfig, RunConfig, SimulateConfig, ACCEPTANCE_TRACKS};
use crate::output::{track_file_name, OutputDir};
use crate::CliError;

/// Voltage grid for model CDF curves.
fn voltage_grid() -> Vec<f64> {
    (0..=300).map(|i| i as f64 * 0.01).collect()
}

/// Lag grid, in wavelengths, for fitted autocorrelation curves.
fn lag_grid() -> Vec<f64> {
    (0..=200).map(|i| i as f64 * 0.05).collect()
}

pub fn simulate(cfg: &SimulateConfig, out_dir: &Path, out: &mut dyn Write) -> Result<PathBuf, CliError> {
    let track_cfg = cfg.geometry.track_config(cfg.seed);
    let mapping = cfg.mapping.build(cfg.seed);
    let tracks: Vec<SynthesizedTrack> = (0..cfg.tracks)
        .into_par_iter()
        .map(|i| {
            let mut s = synthesize_ensemble_track(&cfg.taps, cfg.k_range_db, &cfg.autocorr, &track_cfg, i, &mapping)?;
            let mut labels = s.track.labels().clone();
            labels.environment = cfg.environment;
            labels.polarization = cfg.polarization;
            s.track.set_labels(labels);
            Ok(s)
        })
        .collect::<Result<_, mmwf_core::SynthesisError>>()?;

    let mut dir = OutputDir::create(out_dir)?;
    for (i, s) in tracks.iter().enumerate() {
        dir.write_track(&track_file_name(i, cfg.tracks), &s.track)?;
    }
    let manifest = dir.finish(RunConfig::Simulate(cfg.clone()))?;

    let cells: usize = tracks.iter().map(|s| s.track.valid_mask().len()).sum();
    let valid: usize = tracks.iter().map(|s| s.track.valid_mask().iter().filter(|&&v| v).count()).sum();
    let eigen = tracks.iter().filter(|s| !s.diagnostics.eigen_clipped_taps.is_empty()).count();
    let model = tracks.iter().filter(|s| s.diagnostics.model_clipped).count();
    let m = cfg.autocorr;
    writeln!(
        out,
        "simulated {} track(s) [{}]: K {}..{} dB, autocorr a={} b={} c={}, seed {}",
        cfg.tracks,
        cfg.preset.as_deref().unwrap_or("explicit"),
        cfg.k_range_db[0],
        cfg.k_range_db[1],
        m.a,
        m.b,
        m.c,
        cfg.seed
    )?;
    writeln!(
        out,
        "  {} positions x {} delay bins per track; {:.1}% of cells above the noise floor",
        cfg.geometry.n_positions,
        tracks.first().map_or(0, |s| s.track.n_bins()),
        100.0 * valid as f64 / cells.max(1) as f64
    )?;
    if model > 0 {
        writeln!(out, "  note: negative model correlations clipped to 0 in {model} track(s)")?;
    }
    if eigen > 0 {
        writeln!(out, "  warning: correlation eigenvalues clipped in {eigen} track(s)")?;
    }
    writeln!(out, "  manifest: {}", manifest.display())?;
    Ok(manifest)
}

/// A pooled analysis plus the samples it was built from.
#[derive(Debug, Clone)]
pub struct Analysis {
    pub samples: FadingSampleSet,
    pub report: AnalysisReport,
    pub warnings: Vec<String>,
}

pub fn analyze_tracks(
    tracks: &[SpatialTrackPdp],
    cfg: &AnalysisConfig,
    decorrelation_threshold: f64,
) -> Result<Analysis, AnalysisError> {
    let samples = extract_pooled_samples(tracks, cfg)?;
    let fit = build_fit_report(&samples, cfg.bracket_tolerance)?;
    let estimate = ensemble_autocorrelation(tracks, cfg)?;
    let mut warnings = Vec::new();
    let autocorr_fit = match fit_autocorr_model(&estimate, cfg) {
        Ok(f) => Some(f),
        Err(e @ (AnalysisError::InsufficientData(_) | AnalysisError::Data(_))) => {
            warnings.push(format!("autocorrelation model not fitted: {e}"));
            None
        }
        Err(e) => return Err(e),
    };
    if fit.rician.degenerate {
        warnings.push("Rician fit is degenerate".into());
    }
    if fit.lognormal.degenerate {
        warnings.push("lognormal fit is degenerate".into());
    }
    if autocorr_fit.is_some_and(|f| f.degenerate) {
        warnings.push("autocorrelation fit is degenerate".into());
    }
    Ok(Analysis {
        samples,
        report: AnalysisReport::new(fit, estimate, autocorr_fit, decorrelation_threshold),
        warnings,
    })
}

/// Report and plot files under `prefix`, which is empty or ends in `/`.
fn write_analysis(dir: &mut OutputDir, prefix: &str, a: &Analysis, with_ecdf: bool) -> Result<(), CliError> {
    let r = &a.report;
    dir.write_report(&format!("{prefix}report.json"), r)?;
    dir.write_plot(&format!("{prefix}autocorr.csv"), PlotData::Autocorr(&r.autocorr))?;
    if let Some(f) = &r.autocorr_fit {
        let curve = ModelCurve::autocorr(&f.model, &lag_grid());
        dir.write_plot(&format!("{prefix}autocorr_model.csv"), PlotData::Curve(&curve))?;
    }
    if with_ecdf {
        let ecdf = EmpiricalCdf::new(&a.samples)?;
        dir.write_plot(&format!("{prefix}ecdf.csv"), PlotData::Ecdf(&ecdf))?;
    }
    let grid = voltage_grid();
    let fit = &r.fit;
    let ms = fit.rician.params.mean_square();
    let curves = [
        ("cdf_rician.csv", ModelCurve::rician_cdf(&fit.rician.params, &grid)),
        ("cdf_rayleigh.csv", ModelCurve::rayleigh_cdf(&fit.rayleigh.params, &grid)),
        ("cdf_lognormal.csv", ModelCurve::lognormal_cdf(&fit.lognormal.params, &grid)),
        (
            "cdf_rician_k_low.csv",
            ModelCurve::rician_cdf(&mmwf_core::RicianParams::from_k_db(fit.bounding_k.k_low_db as f64, ms)?, &grid),
        ),
        (
            "cdf_rician_k_high.csv",
            ModelCurve::rician_cdf(&mmwf_core::RicianParams::from_k_db(fit.bounding_k.k_high_db as f64, ms)?, &grid),
        ),
    ];
    for (name, curve) in &curves {
        dir.write_plot(&format!("{prefix}{name}"), PlotData::Curve(curve))?;
    }
    Ok(())
}

fn print_analysis(out: &mut dyn Write, a: &Analysis) -> std::io::Result<()> {
    let r = &a.report;
    let f = &r.fit;
    writeln!(
        out,
        "  {} samples; best fit {} (errors: rician {:.3e}, rayleigh {:.3e}, lognormal {:.3e})",
        f.n_samples, f.best, f.rician.error, f.rayleigh.error, f.lognormal.error
    )?;
    writeln!(
        out,
        "  Rician K {:.1} dB; bounding K [{}, {}] dB{}",
        f.rician.k_db,
        f.bounding_k.k_low_db,
        f.bounding_k.k_high_db,
        if f.bounding_k.exact {
            String::new()
        } else {
            format!(" (not exact, max deviation {:.4})", f.bounding_k.max_violation)
        }
    )?;
    match &r.autocorr_fit {
        Some(m) => writeln!(
            out,
            "  autocorrelation fit a={:.3} b={:.3} c={:.3} (mse {:.2e}, {} points)",
            m.model.a, m.model.b, m.model.c, m.mse, m.n_points
        )?,
        None => writeln!(out, "  autocorrelation fit: none")?,
    }
    match r.decorrelation_lag_wavelengths {
        Some(l) => writeln!(out, "  decorrelates below {} at {l:.2} wavelengths", r.decorrelation_threshold)?,
        None => writeln!(out, "  stays above {} over the estimated lags", r.decorrelation_threshold)?,
    }
    for w in &a.warnings {
        writeln!(out, "  warning: {w}")?;
    }
    Ok(())
}

fn load_tracks(paths: &[PathBuf]) -> Result<Vec<SpatialTrackPdp>, CliError> {
    let tracks: Vec<SpatialTrackPdp> = paths
        .par_iter()
        .map(|p| load_track(p).map_err(|e| CliError::Data(format!("{}: {e}", p.display()))))
        .collect::<Result<_, _>>()?;
    let (Some(first), Some(first_path)) = (tracks.first(), paths.first()) else {
        return Err(CliError::Data("no input tracks".into()));
    };
    for (t, p) in tracks.iter().zip(paths).skip(1) {
        if t.n_bins() != first.n_bins() || t.n_positions() != first.n_positions() {
            return Err(CliError::Data(format!(
                "dimension mismatch: {} has {} positions x {} bins, but {} has {} x {}",
                p.display(),
                t.n_positions(),
                t.n_bins(),
                first_path.display(),
                first.n_positions(),
                first.n_bins()
            )));
        }
        if t.geometry() != first.geometry() {
            return Err(CliError::Data(format!(
                "geometry mismatch: {} differs from {} ({:?} vs {:?})",
                p.display(),
                first_path.display(),
                t.geometry(),
                first.geometry()
            )));
        }
    }
    Ok(tracks)
}

pub fn analyze(cfg: &AnalyzeConfig, out_dir: &Path, out: &mut dyn Write) -> Result<PathBuf, CliError> {
    let tracks = load_tracks(&cfg.inputs)?;
    let pooled = analyze_tracks(&tracks, &cfg.analysis, cfg.decorrelation_threshold)?;
    let per_track: Vec<(String, Result<Analysis, AnalysisError>)> = if cfg.per_track {
        tracks
            .par_iter()
            .zip(&cfg.inputs)
            .map(|(t, p)| {
                let stem = p.file_stem().and_then(|s| s.to_str()).unwrap_or("track").to_string();
                (stem, analyze_tracks(std::slice::from_ref(t), &cfg.analysis, cfg.decorrelation_threshold))
            })
            .collect()
    } else {
        Vec::new()
    };

    let mut dir = OutputDir::create(out_dir)?;
    write_analysis(&mut dir, "", &pooled, true)?;
    for (stem, a) in &per_track {
        if let Ok(a) = a {
            dir.write_report(&format!("per_track/{stem}.json"), &a.report)?;
        }
    }
    let manifest = dir.finish(RunConfig::Analyze(cfg.clone()))?;

    writeln!(out, "analyzed {} track(s)", tracks.len())?;
    print_analysis(out, &pooled)?;
    for (stem, a) in &per_track {
        if let Err(e) = a {
            writeln!(out, "  warning: {stem}: no per-track report: {e}")?;
        }
    }
    writeln!(out, "  manifest: {}", manifest.display())?;
    Ok(manifest)
}

/// One compared quantity of a round trip.
#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    pub quantity: &'static str,
    pub target: f64,
    pub recovered: f64,
    /// Absolute difference for parameters; the value itself for error measures.
    pub delta: f64,
    pub tolerance: f64,
    pub pass: bool,
}

#[derive(Debug, Clone)]
pub struct PresetOutcome {
    pub preset: FadingPreset,
    pub analysis: Analysis,
    pub bracket: BracketCheck,
    /// Estimate-vs-preset MSE over the fit window.
    pub autocorr_mse: f64,
    pub checks: Vec<Check>,
}

impl PresetOutcome {
    pub fn pass(&self) -> bool {
        self.checks.iter().all(|c| c.pass)
    }
}

pub fn synthesize_preset(
    preset: &FadingPreset,
    cfg: &RoundtripConfig,
) -> Result<Vec<SpatialTrackPdp>, CliError> {
    let seed = domain_seed(cfg.seed, &preset.name);
    let track_cfg = cfg.geometry.track_config(seed);
    let mapping = cfg.mapping.build(seed);
    let tracks = (0..cfg.tracks)
        .into_par_iter()
        .map(|i| {
            mmwf_core::synthesis::synthesize_preset_track(&cfg.taps, preset, &track_cfg, i, &mapping).map(|s| s.track)
        })
        .collect::<Result<_, _>>()?;
    Ok(tracks)
}

pub fn roundtrip_preset(preset: &FadingPreset, tracks: &[SpatialTrackPdp], cfg: &RoundtripConfig) -> Result<PresetOutcome, CliError> {
    let analysis = analyze_tracks(tracks, &cfg.analysis, cfg.decorrelation_threshold)?;
    let tol = cfg.tolerances;
    let bracket = bracket_check(&analysis.samples, preset.k_low_db(), preset.k_high_db())?;
    let autocorr_mse = analysis.report.autocorr.mse_against(&preset.autocorr, cfg.analysis.fit_max_lag);
    let mut checks = vec![
        Check {
            quantity: "cdf bracket",
            target: 0.0,
            recovered: bracket.max_violation(),
            delta: bracket.max_violation(),
            tolerance: tol.bracket_cdf,
            pass: bracket.max_violation() <= tol.bracket_cdf,
        },
        Check {
            quantity: "autocorr mse",
            target: 0.0,
            recovered: autocorr_mse,
            delta: autocorr_mse,
            tolerance: tol.autocorr_mse,
            pass: autocorr_mse < tol.autocorr_mse,
        },
    ];
    let fitted = analysis.report.autocorr_fit.map(|f| f.model);
    let m = preset.autocorr;
    for (quantity, target, got, tolerance) in [
        ("A", m.a, fitted.map(|f| f.a), tol.a),
        ("B", m.b, fitted.map(|f| f.b), tol.b),
        ("C", m.c, fitted.map(|f| f.c), tol.c),
    ] {
        let recovered = got.unwrap_or(f64::NAN);
        let delta = (recovered - target).abs();
        checks.push(Check {
            quantity,
            target,
            recovered,
            delta,
            tolerance,
            pass: delta <= tolerance,
        });
    }
    Ok(PresetOutcome {
        preset: preset.clone(),
        analysis,
        bracket,
        autocorr_mse,
        checks,
    })
}

fn verdict(pass: bool) -> &'static str {
    if pass {
        "PASS"
    } else {
        "FAIL"
    }
}

fn outcome_text(o: &PresetOutcome) -> String {
    let f = &o.analysis.report.fit;
    let p = &o.preset;
    let mut s = format!(
        "{}: {} samples, Rician K {:.1} dB, bounding K [{}, {}] dB vs preset [{}, {}] dB\n",
        p.name, f.n_samples, f.rician.k_db, f.bounding_k.k_low_db, f.bounding_k.k_high_db, p.k_range_db[0], p.k_range_db[1]
    );
    s.push_str(&format!(
        "  quantiles outside [{}, {}] dB band: {} of {}\n",
        p.k_range_db[0],
        p.k_range_db[1],
        o.bracket.count_above(0.0),
        o.bracket.levels.len()
    ));
    for c in &o.checks {
        s.push_str(&format!(
            "  {:<13} target {:>8.4}  recovered {:>8.4}  delta {:>8.4}  tolerance {:>6.4}  {}\n",
            c.quantity,
            c.target,
            c.recovered,
            c.delta,
            c.tolerance,
            verdict(c.pass)
        ));
    }
    s
}

fn summary_table(outcomes: &[PresetOutcome]) -> String {
    let mut s = format!(
        "{:<16} {:>10} {:>9} {:>9} {:>7} {:>7} {:>7}  result\n",
        "preset", "bounding K", "cdf dev", "ac mse", "A", "B", "C"
    );
    for o in outcomes {
        let b = &o.analysis.report.fit.bounding_k;
        let m = o.analysis.report.autocorr_fit.map(|f| f.model);
        let fmt = |v: Option<f64>| v.map_or_else(|| "-".to_string(), |v| format!("{v:.3}"));
        s.push_str(&format!(
            "{:<16} {:>10} {:>9.4} {:>9.4} {:>7} {:>7} {:>7}  {}\n",
            o.preset.name,
            format!("[{}, {}]", b.k_low_db, b.k_high_db),
            o.bracket.max_violation(),
            o.autocorr_mse,
            fmt(m.map(|m| m.a)),
            fmt(m.map(|m| m.b)),
            fmt(m.map(|m| m.c)),
            verdict(o.pass())
        ));
    }
    s
}

/// Runs every preset in `cfg`; the boolean is the overall verdict.
pub fn roundtrip(cfg: &RoundtripConfig, out_dir: Option<&Path>, out: &mut dyn Write) -> Result<bool, CliError> {
    if cfg.tracks < ACCEPTANCE_TRACKS {
        writeln!(
            out,
            "WARN: insufficient ensemble: {} track(s) per preset; tolerances assume {ACCEPTANCE_TRACKS}",
            cfg.tracks
        )?;
    }
    let mut dir = out_dir.map(OutputDir::create).transpose()?;
    let mut outcomes = Vec::new();
    for preset in &cfg.presets {
        let tracks = synthesize_preset(preset, cfg)?;
        let outcome = roundtrip_preset(preset, &tracks, cfg)?;
        write!(out, "{}", outcome_text(&outcome))?;
        for w in &outcome.analysis.warnings {
            writeln!(out, "  warning: {w}")?;
        }
        if let Some(dir) = dir.as_mut() {
            let prefix = format!("{}/", preset.name);
            write_analysis(dir, &prefix, &outcome.analysis, false)?;
            if cfg.write_tracks {
                for (i, t) in tracks.iter().enumerate() {
                    dir.write_track(&format!("{prefix}tracks/{}", track_file_name(i, cfg.tracks)), t)?;
                }
            }
        }
        outcomes.push(outcome);
    }
    let table = summary_table(&outcomes);
    writeln!(out)?;
    write!(out, "{table}")?;
    let pass = outcomes.iter().all(PresetOutcome::pass);
    if let Some(mut dir) = dir {
        let details: String = outcomes.iter().map(outcome_text).collect();
        dir.write("summary.txt", &format!("{details}\n{table}"))?;
        let manifest = dir.finish(RunConfig::Roundtrip(cfg.clone()))?;
        writeln!(out, "manifest: {}", manifest.display())?;
    }
    writeln!(out, "{}", verdict(pass))?;
    Ok(pass)
}
