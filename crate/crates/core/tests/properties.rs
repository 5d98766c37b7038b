use mmwf_core::analysis::{
    bin_delays, extract_fading_samples, fit_autocorr_curve, fit_rician, spatial_autocorrelation, AnalysisConfig,
};
use mmwf_core::channel::{
    autocorr_model_eval, rayleigh_pdf, rician_cdf, rician_k_db, rician_pdf, AutocorrModel, RayleighParams,
    RicianParams, SpatialTrackPdp, TrackGeometry, TrackLabels,
};
use mmwf_core::persistence::{format_track, parse_track};
use mmwf_core::synthesis::{
    invert_rician_power_correlation, rician_power_correlation, synthesize_track, TapSpec, TrackConfig,
};
use proptest::prelude::*;

fn track_strategy() -> impl Strategy<Value = SpatialTrackPdp> {
    (2usize..40, 1usize..5).prop_flat_map(|(n, bins)| {
        proptest::collection::vec(prop_oneof![1 => Just(0.0), 6 => 1e-9f64..1e-2], n * bins).prop_map(move |p| {
            SpatialTrackPdp::from_powers(TrackGeometry::default(), TrackLabels::default(), n, bins, &p).unwrap()
        })
    })
}

fn loose_cfg() -> AnalysisConfig {
    AnalysisConfig {
        min_occupancy: 0.0,
        ..AnalysisConfig::default()
    }
}

fn close(a: f64, b: f64, rel: f64) -> bool {
    (a - b).abs() <= rel * a.abs().max(b.abs()).max(1e-300)
}

proptest! {
    #[test]
    fn rician_without_los_is_rayleigh(sigma in 0.01f64..10.0, x in 0.0f64..50.0) {
        let r = rician_pdf(x, &RicianParams::new(0.0, sigma).unwrap()).unwrap();
        let y = rayleigh_pdf(x, &RayleighParams::new(sigma).unwrap()).unwrap();
        prop_assert!((r - y).abs() <= 1e-12 * y.max(1.0));
    }

    #[test]
    fn k_grows_with_amplitude_and_falls_with_spread(a in 0.01f64..10.0, da in 0.01f64..1.0, s in 0.05f64..5.0, ds in 0.01f64..1.0) {
        let k = |a: f64, s: f64| rician_k_db(&RicianParams::new(a, s).unwrap());
        prop_assert!(k(a + da, s) > k(a, s));
        prop_assert!(k(a, s + ds) < k(a, s));
    }

    #[test]
    fn rician_cdf_is_monotone(k_db in -10.0f64..30.0, x in 0.0f64..3.0, dx in 0.0f64..0.5) {
        let p = RicianParams::from_k_db(k_db, 1.0).unwrap();
        let (lo, hi) = (rician_cdf(x, &p).unwrap(), rician_cdf(x + dx, &p).unwrap());
        prop_assert!(lo <= hi + 1e-15);
        prop_assert!((0.0..=1.0).contains(&lo));
    }

    #[test]
    fn model_at_origin(a in 0.0f64..1.2, b in 0.0f64..6.0, c in -0.5f64..0.5) {
        let m = AutocorrModel::new(a, b, c).unwrap();
        prop_assert_eq!(autocorr_model_eval(&m, 0.0).unwrap(), a - c);
    }

    #[test]
    fn binning_conserves_power(raw in proptest::collection::vec((0.0f64..2e-7, 0.0f64..1.0), 0..50)) {
        let bins = bin_delays(&raw, 2.5e-9).unwrap();
        let total: f64 = raw.iter().map(|r| r.1).sum();
        prop_assert!((bins.iter().sum::<f64>() - total).abs() <= 1e-12 * total.max(1.0));
        for &(d, _) in &raw {
            prop_assert!(((d / 2.5e-9).floor() as usize) < bins.len());
        }
    }

    #[test]
    fn mapping_inverts(k in 0.0f64..1000.0, rho in 0.0f64..1.0) {
        let r = rician_power_correlation(k, rho);
        prop_assert!((invert_rician_power_correlation(k, r) - rho).abs() < 1e-9);
    }

    #[test]
    fn estimator_bounds(track in track_strategy()) {
        if let Ok(e) = spatial_autocorrelation(&track, &loose_cfg()) {
            prop_assert_eq!(e.coefficients[0], Some(1.0));
            for c in e.coefficients.iter().flatten() {
                prop_assert!(c.abs() <= 1.0 + 1e-12);
            }
        }
    }

    #[test]
    fn scale_invariance(track in track_strategy(), exp in -3i32..4) {
        let factor = 10f64.powi(exp);
        let cfg = loose_cfg();
        let scaled = track.scaled(factor).unwrap();
        match (extract_fading_samples(&track, &cfg), extract_fading_samples(&scaled, &cfg)) {
            (Ok(a), Ok(b)) => {
                prop_assert_eq!(a.len(), b.len());
                for (x, y) in a.samples.iter().zip(&b.samples) {
                    prop_assert!(close(*x, *y, 1e-12));
                }
            }
            (Err(_), Err(_)) => {}
            (a, b) => prop_assert!(false, "{a:?} vs {b:?}"),
        }
        if let (Ok(a), Ok(b)) = (spatial_autocorrelation(&track, &cfg), spatial_autocorrelation(&scaled, &cfg)) {
            for (x, y) in a.coefficients.iter().zip(&b.coefficients) {
                match (x, y) {
                    (Some(x), Some(y)) => prop_assert!((x - y).abs() < 1e-10),
                    (None, None) => {}
                    _ => prop_assert!(false),
                }
            }
        }
    }

    #[test]
    fn normalization_idempotent(p in proptest::collection::vec(1e-6f64..1e-2, 2..66)) {
        let n = p.len();
        let cfg = loose_cfg();
        let t = SpatialTrackPdp::from_powers(TrackGeometry::default(), TrackLabels::default(), n, 1, &p).unwrap();
        let once = extract_fading_samples(&t, &cfg).unwrap();
        // the floor is −100 dBm = 1e-10 mW, comfortably under normalized values
        let t2 = SpatialTrackPdp::from_powers(TrackGeometry::default(), TrackLabels::default(), n, 1, &once.samples).unwrap();
        let twice = extract_fading_samples(&t2, &cfg).unwrap();
        for (a, b) in once.samples.iter().zip(&twice.samples) {
            prop_assert!(close(*a, *b, 1e-12));
        }
    }

    #[test]
    fn track_text_is_stable(track in track_strategy(), seed in any::<Option<u64>>()) {
        let mut track = track;
        track.set_labels(TrackLabels { seed, ..TrackLabels::default() });
        let first = format_track(&track);
        let loaded = parse_track(&first).unwrap();
        prop_assert_eq!(format_track(&loaded), first);
        prop_assert_eq!(loaded.valid_mask(), track.valid_mask());
        for (a, b) in loaded.powers_mw().iter().zip(track.powers_mw()) {
            prop_assert!(close(*a, *b, 2e-7));
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn synthesis_is_deterministic_and_mean_preserving(seed in any::<u64>(), k_db in -5.0f64..20.0) {
        // far above the floor so no fade is lost to the sentinel
        let taps = vec![TapSpec::new(-10.0, 0.0, k_db), TapSpec::new(-20.0, 10e-9, k_db)];
        let m = AutocorrModel::new(0.99, 2.05, 0.0).unwrap();
        let cfg = TrackConfig { seed, ..TrackConfig::default() };
        let a = synthesize_track(&taps, &m, &cfg).unwrap();
        let b = synthesize_track(&taps, &m, &cfg).unwrap();
        prop_assert_eq!(&a, &b);
        for (tap, bin) in taps.iter().zip(&a.diagnostics.tap_bins) {
            let seq: Vec<f64> = a.track.bin_sequence(*bin).into_iter().flatten().collect();
            let mean = seq.iter().sum::<f64>() / seq.len() as f64;
            let want = 10f64.powf(tap.mean_power_dbm / 10.0);
            prop_assert!(close(mean, want, 1e-9));
        }
    }

    #[test]
    fn exact_model_curves_are_recovered(a in 0.5f64..1.2, b in 0.3f64..5.5, c in -0.3f64..0.3) {
        let m = AutocorrModel::new(a, b, c).unwrap();
        let xs: Vec<f64> = (0..=20).map(|i| i as f64 * 0.5).collect();
        let ys: Vec<f64> = xs.iter().map(|&x| m.eval(x)).collect();
        let f = fit_autocorr_curve(&xs, &ys).unwrap();
        prop_assert!(f.mse < 1e-10, "{f:?}");
    }
}

#[test]
fn rician_fit_is_scale_invariant() {
    let p: Vec<f64> = (0..400).map(|i| 1e-6 * (1.0 + ((i * 37) % 101) as f64 / 50.0)).collect();
    let t = SpatialTrackPdp::from_powers(TrackGeometry::default(), TrackLabels::default(), 400, 1, &p).unwrap();
    let cfg = AnalysisConfig::default();
    let a = fit_rician(&extract_fading_samples(&t, &cfg).unwrap()).unwrap();
    let b = fit_rician(&extract_fading_samples(&t.scaled(1e3).unwrap(), &cfg).unwrap()).unwrap();
    assert_eq!(a.k_db, b.k_db);
}
