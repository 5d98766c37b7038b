//! End-to-end acceptance suite. Prints one PASS/FAIL line per criterion and
//! exits non-zero if any criterion fails.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::Command;
use std::time::Instant;

use mmwf_cli::config::RoundtripConfig;
use mmwf_cli::pipeline::{roundtrip_preset, synthesize_preset, PresetOutcome};
use mmwf_core::analysis::{
    build_fit_report, extract_fading_samples, fit_autocorr_curve, fit_rician, spatial_autocorrelation, AnalysisConfig,
    FadingSampleSet, Family,
};
use mmwf_core::channel::{
    bundled_presets, lognormal_pdf, preset_lookup, rayleigh_pdf, rician_pdf, AutocorrModel, Environment,
    LognormalParams, Polarization, RayleighParams, RicianParams, TrackGeometry, TrackLabels, BUNDLED_PRESETS_TOML,
};
use mmwf_core::rng;
use mmwf_core::synthesis::{default_directional_taps, synthesize_track, TrackConfig};
use mmwf_core::SpatialTrackPdp;
use rand_distr::{Distribution, StandardNormal, Uniform};
use sha2::{Digest, Sha256};

const PRESET_FILE: &[u8] = include_bytes!("../../core/data/presets.toml");
const PRESET_SHA256: &str = "071fdc49873417eac969b84aeec5b557a2dfcdccd8553b5f892ab1fd95abbb22";
const SEED: u64 = 7;
const TRACKS: usize = 200;

type Verdict = Result<String, String>;

fn check(ok: bool, detail: String) -> Verdict {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn preset_fidelity() -> Verdict {
    let digest = hex::encode(Sha256::digest(PRESET_FILE));
    if digest != PRESET_SHA256 {
        return Err(format!("preset file sha256 {digest}"));
    }
    if BUNDLED_PRESETS_TOML.as_bytes() != PRESET_FILE {
        return Err("embedded preset text differs from the data file".into());
    }
    use Environment::*;
    use Polarization::*;
    let table = [
        (Los, VV, [9.0, 15.0], (0.99, 2.05, 0.0)),
        (Los, VH, [3.0, 7.0], (1.0, 0.9, 0.05)),
        (Nlos, VV, [5.0, 8.0], (0.9, 1.05, -0.1)),
        (Nlos, VH, [3.0, 7.0], (1.0, 1.9, 0.0)),
        (LosToNlos, VV, [4.0, 7.0], (0.9, 1.9, -0.3)),
        (LosToNlos, VH, [6.0, 10.0], (0.9, 1.05, 0.0)),
    ];
    for (env, pol, k, (a, b, c)) in table {
        let p = preset_lookup(env, pol);
        if p.k_range_db != k || p.autocorr != AutocorrModel::new(a, b, c).unwrap() {
            return Err(format!("{env} {pol}: {:?} {:?}", p.k_range_db, p.autocorr));
        }
    }
    Ok(format!("6 K ranges and 6 (A, B, C) triples exact; sha256 {}", &digest[..12]))
}

fn simpson(f: impl Fn(f64) -> f64, lo: f64, hi: f64, n: usize) -> f64 {
    let h = (hi - lo) / n as f64;
    let inner: f64 = (1..n).map(|i| f(lo + i as f64 * h) * if i % 2 == 1 { 4.0 } else { 2.0 }).sum();
    (f(lo) + f(hi) + inner) * h / 3.0
}

fn distribution_correctness() -> Verdict {
    let mut r = rng::stream(SEED);
    let amp = Uniform::new(0.0, 5.0).unwrap();
    let spread = Uniform::new(0.05, 3.0).unwrap();
    let mu = Uniform::new(-2.0, 2.0).unwrap();
    let n = 20_000;
    let mut worst: f64 = 0.0;
    for _ in 0..20 {
        let (a, s) = (amp.sample(&mut r), spread.sample(&mut r));
        let rice = RicianParams::new(a, s).unwrap();
        let lo = (a - 12.0 * s).max(0.0);
        let total = simpson(|x| rician_pdf(x, &rice).unwrap(), lo, a + 12.0 * s, n);
        worst = worst.max((total - 1.0).abs());

        let ray = RayleighParams::new(s).unwrap();
        let total = simpson(|x| rayleigh_pdf(x, &ray).unwrap(), 0.0, 12.0 * s, n);
        worst = worst.max((total - 1.0).abs());

        let (m, sl) = (mu.sample(&mut r), spread.sample(&mut r).min(2.0));
        let logn = LognormalParams::new(m, sl).unwrap();
        // integrate in ln x, where the density is Gaussian
        let total = simpson(|t| lognormal_pdf(t.exp(), &logn).unwrap() * t.exp(), m - 12.0 * sl, m + 12.0 * sl, n);
        worst = worst.max((total - 1.0).abs());
    }
    let mut pointwise: f64 = 0.0;
    for _ in 0..20 {
        let s = spread.sample(&mut r);
        let rice = RicianParams::new(0.0, s).unwrap();
        let ray = RayleighParams::new(s).unwrap();
        for i in 0..1000 {
            let x = i as f64 * 10.0 * s / 999.0;
            let (p, q) = (rician_pdf(x, &rice).unwrap(), rayleigh_pdf(x, &ray).unwrap());
            pointwise = pointwise.max((p - q).abs() / q.max(1.0));
        }
    }
    check(
        worst <= 1e-6 && pointwise <= 1e-12,
        format!("max |integral - 1| = {worst:.2e} (tol 1e-6); A=0 Rician vs Rayleigh {pointwise:.2e} (tol 1e-12)"),
    )
}

fn rician_powers(k_db: f64, n: usize, seed: u64) -> FadingSampleSet {
    let k = 10f64.powf(k_db / 10.0);
    let a = (k / (k + 1.0)).sqrt();
    let s = (0.5 / (k + 1.0)).sqrt();
    let mut r = rng::stream(seed);
    let p = (0..n)
        .map(|_| {
            let x: f64 = StandardNormal.sample(&mut r);
            let y: f64 = StandardNormal.sample(&mut r);
            (a + s * x).powi(2) + (s * y).powi(2)
        })
        .collect();
    FadingSampleSet::from_power_ratios(p).unwrap()
}

fn rician_round_trip() -> Verdict {
    let mut ok = true;
    let mut parts = Vec::new();
    for (i, k_db) in [5.0, 8.0, 9.0, 12.0, 15.0].into_iter().enumerate() {
        let s = rician_powers(k_db, 100_000, SEED + i as u64);
        let fit = fit_rician(&s).map_err(|e| e.to_string())?;
        let best = build_fit_report(&s, 0.005).map_err(|e| e.to_string())?.best;
        ok &= (fit.k_db - k_db).abs() <= 0.5 && best == Family::Rician;
        parts.push(format!("{k_db}->{:.1} {best}", fit.k_db));
    }
    check(ok, format!("{} (tol ±0.5 dB, best = rician)", parts.join(", ")))
}

fn ensembles() -> Result<Vec<PresetOutcome>, String> {
    let cfg = RoundtripConfig::defaults(bundled_presets().presets.clone(), TRACKS, SEED);
    cfg.presets
        .iter()
        .map(|p| {
            let tracks = synthesize_preset(p, &cfg).map_err(|e| e.to_string())?;
            roundtrip_preset(p, &tracks, &cfg).map_err(|e| e.to_string())
        })
        .collect()
}

fn fading_round_trip(outcomes: &[PresetOutcome]) -> Verdict {
    let mut ok = true;
    let parts: Vec<String> = outcomes
        .iter()
        .map(|o| {
            let c = &o.checks[0];
            ok &= c.pass;
            format!(
                "{} {:.4} ({}/{} quantiles outside)",
                o.preset.name,
                c.recovered,
                o.bracket.count_above(0.0),
                o.bracket.levels.len()
            )
        })
        .collect();
    check(ok, format!("max CDF deviation outside the K band, tol 0.02: {}", parts.join("; ")))
}

fn autocorr_round_trip(outcomes: &[PresetOutcome]) -> Verdict {
    let mut ok = true;
    let parts: Vec<String> = outcomes
        .iter()
        .map(|o| {
            let failed: Vec<&str> = o.checks[1..].iter().filter(|c| !c.pass).map(|c| c.quantity).collect();
            ok &= failed.is_empty();
            let m = o.analysis.report.autocorr_fit.map(|f| f.model);
            format!(
                "{} mse {:.4} fit ({}) {}",
                o.preset.name,
                o.autocorr_mse,
                m.map_or("none".into(), |m| format!("{:.3}, {:.3}, {:.3}", m.a, m.b, m.c)),
                if failed.is_empty() { "ok".to_string() } else { format!("off: {}", failed.join(",")) }
            )
        })
        .collect();
    check(ok, format!("mse < 0.01, (A, B, C) within (0.05, 0.25, 0.05): {}", parts.join("; ")))
}

fn lag_text(lag: Option<f64>) -> String {
    lag.map_or_else(|| "none".to_string(), |l| format!("{l:.2}"))
}

fn decorrelation(outcomes: &[PresetOutcome]) -> Verdict {
    let find = |name: &str| outcomes.iter().find(|o| o.preset.name == name).ok_or(format!("{name} missing"));
    let los = find("los-vv")?;
    let model = los.analysis.report.autocorr_fit.ok_or("LOS V-V has no fitted model")?.model;
    let los_lag = (0..=20).map(|i| i as f64 * 0.5).find(|&x| model.eval(x) < 0.05);
    let nlos = find("nlos-vv")?;
    let nlos_lag = nlos.analysis.report.autocorr.first_lag_below(0.15);
    check(
        los_lag.is_some_and(|l| l <= 2.0) && nlos_lag.is_some_and(|l| l <= 5.0),
        format!(
            "LOS V-V fitted model < 0.05 at {} λ (≤ 2.0); NLOS V-V estimate < 0.15 at {} λ (≤ 5.0)",
            lag_text(los_lag),
            lag_text(nlos_lag)
        ),
    )
}

fn rel(a: f64, b: f64) -> f64 {
    if a == b {
        0.0
    } else {
        (a - b).abs() / a.abs().max(b.abs())
    }
}

fn estimator_cases() -> Verdict {
    let cfg = AnalysisConfig::default();
    let taps = default_directional_taps(-100.0);
    let model = AutocorrModel::new(0.99, 2.05, 0.0).unwrap();
    let track = synthesize_track(&taps, &model, &TrackConfig { seed: SEED, ..TrackConfig::default() })
        .map_err(|e| e.to_string())?
        .track;
    let est = spatial_autocorrelation(&track, &cfg).map_err(|e| e.to_string())?;
    if est.coefficients[0] != Some(1.0) {
        return Err(format!("lag 0 = {:?}", est.coefficients[0]));
    }

    let alt: Vec<f64> = (0..66).map(|i| if i % 2 == 0 { 1e-6 } else { 4e-6 }).collect();
    let alt = SpatialTrackPdp::from_powers(TrackGeometry::default(), TrackLabels::default(), 66, 1, &alt).unwrap();
    let lag1 = spatial_autocorrelation(&alt, &cfg).map_err(|e| e.to_string())?.coefficients[1];
    if lag1 != Some(-1.0) {
        return Err(format!("alternating sequence lag 1 = {lag1:?}"));
    }

    let scaled = track.scaled(1e3).map_err(|e| e.to_string())?;
    let (a, b) = (
        extract_fading_samples(&track, &cfg).map_err(|e| e.to_string())?,
        extract_fading_samples(&scaled, &cfg).map_err(|e| e.to_string())?,
    );
    let mut dev: f64 = 0.0;
    for (x, y) in a.samples.iter().zip(&b.samples) {
        dev = dev.max(rel(*x, *y));
    }
    let (ra, rb) = (build_fit_report(&a, 0.005).map_err(|e| e.to_string())?, build_fit_report(&b, 0.005).map_err(|e| e.to_string())?);
    let discrete_equal = a.source_bins == b.source_bins
        && ra.best == rb.best
        && ra.rician.k_db == rb.rician.k_db
        && ra.bounding_k.k_low_db == rb.bounding_k.k_low_db
        && ra.bounding_k.k_high_db == rb.bounding_k.k_high_db;
    for (x, y) in [
        (ra.rician.error, rb.rician.error),
        (ra.rayleigh.error, rb.rayleigh.error),
        (ra.lognormal.error, rb.lognormal.error),
    ] {
        dev = dev.max(rel(x, y));
    }
    let eb = spatial_autocorrelation(&scaled, &cfg).map_err(|e| e.to_string())?;
    for (x, y) in est.coefficients.iter().zip(&eb.coefficients) {
        match (x, y) {
            (Some(x), Some(y)) => dev = dev.max((x - y).abs()),
            (None, None) => {}
            _ => return Err("scaling changed which lags are estimable".into()),
        }
    }
    check(
        discrete_equal && dev <= 1e-12,
        format!(
            "lag 0 = 1, alternating lag 1 = -1; x1e3 scaling: selections identical={discrete_equal}, continuous outputs within {dev:.1e} (tol 1e-12)"
        ),
    )
}

fn snapshot(root: &Path) -> BTreeMap<PathBuf, Vec<u8>> {
    let mut out = BTreeMap::new();
    let mut stack = vec![root.to_path_buf()];
    while let Some(dir) = stack.pop() {
        for entry in fs::read_dir(&dir).unwrap() {
            let path = entry.unwrap().path();
            if path.is_dir() {
                stack.push(path);
            } else {
                out.insert(path.strip_prefix(root).unwrap().to_path_buf(), fs::read(&path).unwrap());
            }
        }
    }
    out
}

fn determinism() -> Verdict {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let run = |name: &str, jobs: &str| -> Result<BTreeMap<PathBuf, Vec<u8>>, String> {
        let out = dir.path().join(name);
        let status = Command::new(env!("CARGO_BIN_EXE_mmwf"))
            .args(["roundtrip", "--tracks", "200", "--seed", "7", "--write-tracks", "--jobs", jobs, "--out-dir"])
            .arg(&out)
            .env_remove("MMWF_PRESET_PATH")
            .output()
            .map_err(|e| e.to_string())?
            .status;
        if !matches!(status.code(), Some(0) | Some(4)) {
            return Err(format!("roundtrip exited with {status}"));
        }
        Ok(snapshot(&out))
    };
    let first = run("first", "1")?;
    let second = run("second", "1")?;
    let parallel = run("parallel", "8")?;
    let bytes: usize = first.values().map(Vec::len).sum();
    check(
        first == second && first == parallel && !first.is_empty(),
        format!(
            "{} files ({bytes} bytes): repeat identical={}, --jobs 8 identical={}",
            first.len(),
            first == second,
            first == parallel
        ),
    )
}

fn fitter_self_consistency() -> Verdict {
    let xs: Vec<f64> = (0..=10).map(|i| i as f64 * 0.5).collect();
    let mut ok = true;
    let mut parts = Vec::new();
    for p in &bundled_presets().presets {
        let m = p.autocorr;
        let ys: Vec<f64> = xs.iter().map(|&x| m.eval(x)).collect();
        let f = fit_autocorr_curve(&xs, &ys).map_err(|e| e.to_string())?.model;
        let within = (f.a - m.a).abs() <= 0.01 + 1e-9 && (f.b - m.b).abs() <= 0.05 + 1e-9 && (f.c - m.c).abs() <= 0.01 + 1e-9;
        ok &= within;
        parts.push(format!("{} ({:.3}, {:.3}, {:.3})", p.name, f.a, f.b, f.c));
    }
    check(ok, format!("within one grid step (0.01, 0.05, 0.01): {}", parts.join("; ")))
}

fn main() {
    let mut failures = 0;
    let mut report = |n: usize, title: &str, f: &mut dyn FnMut() -> Verdict| {
        let start = Instant::now();
        let verdict = f();
        let secs = start.elapsed().as_secs_f64();
        let (tag, detail) = match verdict {
            Ok(d) => ("PASS", d),
            Err(d) => {
                failures += 1;
                ("FAIL", d)
            }
        };
        println!("criterion {n} {title}: {tag} [{secs:.1} s] {detail}");
    };
    report(1, "preset fidelity", &mut preset_fidelity);
    report(2, "distribution correctness", &mut distribution_correctness);
    report(3, "Rician round trip", &mut rician_round_trip);
    let start = Instant::now();
    let outcomes = ensembles();
    println!("(synthesized and analyzed {TRACKS} tracks x 6 presets in {:.1} s)", start.elapsed().as_secs_f64());
    match &outcomes {
        Ok(o) => {
            report(4, "track round trip, fading", &mut || fading_round_trip(o));
            report(5, "track round trip, autocorrelation", &mut || autocorr_round_trip(o));
            report(6, "decorrelation distances", &mut || decorrelation(o));
        }
        Err(e) => {
            for (n, title) in [(4, "track round trip, fading"), (5, "track round trip, autocorrelation"), (6, "decorrelation distances")] {
                report(n, title, &mut || Err(e.clone()));
            }
        }
    }
    report(7, "autocorrelation estimator cases", &mut estimator_cases);
    report(8, "determinism", &mut determinism);
    report(9, "autocorrelation fitter self-consistency", &mut fitter_self_consistency);
    println!("acceptance: {} of 9 criteria passed", 9 - failures);
    if failures > 0 {
        std::process::exit(1);
    }
}
