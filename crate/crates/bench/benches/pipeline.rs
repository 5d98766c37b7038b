use std::hint::black_box;

use criterion::{criterion_group, criterion_main, Criterion};
use mmwf_core::analysis::{extract_pooled_samples, fit_rician, spatial_autocorrelation, AnalysisConfig};
use mmwf_core::channel::{bundled_presets, Environment, Polarization};
use mmwf_core::synthesis::{
    default_directional_taps, synthesize_preset_ensemble, synthesize_preset_track, CorrelationMapping, TrackConfig,
};

fn synthesis(c: &mut Criterion) {
    let preset = bundled_presets().lookup(Environment::Los, Polarization::VV);
    let cfg = TrackConfig::default();
    let taps = default_directional_taps(cfg.noise_floor_dbm);
    let mapping = CorrelationMapping::Analytic;
    let mut i = 0;
    c.bench_function("synthesize_track los-vv", |b| {
        b.iter(|| {
            i += 1;
            black_box(synthesize_preset_track(&taps, preset, &cfg, i, &mapping).unwrap())
        })
    });
}

fn analysis(c: &mut Criterion) {
    let preset = bundled_presets().lookup(Environment::Los, Polarization::VV);
    let cfg = TrackConfig { seed: 3, ..TrackConfig::default() };
    let taps = default_directional_taps(cfg.noise_floor_dbm);
    let tracks: Vec<_> = synthesize_preset_ensemble(&taps, preset, &cfg, 200, &CorrelationMapping::Analytic)
        .unwrap()
        .into_iter()
        .map(|s| s.track)
        .collect();
    let acfg = AnalysisConfig::default();
    let samples = extract_pooled_samples(&tracks, &acfg).unwrap();

    let mut group = c.benchmark_group("analysis");
    group.sample_size(20);
    group.bench_function(format!("fit_rician {} samples", samples.len()), |b| {
        b.iter(|| black_box(fit_rician(&samples).unwrap()))
    });
    group.bench_function("spatial_autocorrelation one track", |b| {
        b.iter(|| black_box(spatial_autocorrelation(&tracks[0], &acfg).unwrap()))
    });
    group.finish();
}

criterion_group!(benches, synthesis, analysis);
criterion_main!(benches);
