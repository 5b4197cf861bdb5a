use clockwatch::detector::*;
use clockwatch::pipeline::{calibrate_scenario, run_scenario};
use clockwatch::scenario::preset;
use proptest::prelude::*;

fn benign_pairs(seed: u64) -> Vec<(f64, f64)> {
    // Deterministic pseudo-noise; only its spread matters here.
    (0..500u64)
        .map(|k| {
            let u = ((k * 2654435761 + seed * 97) % 1000) as f64 / 1000.0 - 0.5;
            let v = ((k * 40503 + seed * 31) % 997) as f64 / 997.0 - 0.5;
            (u * 1e-7, v * 3e-9)
        })
        .collect()
}

#[test]
fn decision_matrix() {
    assert_eq!(classify(false, false), Classification::Nominal);
    assert_eq!(classify(true, true), Classification::ActiveAttack);
    assert_eq!(classify(true, false), Classification::PersistentOffset);
    assert_eq!(classify(false, true), Classification::FrequencyAnomaly);
}

#[test]
fn warmup_suppresses_early_alarms() {
    let cal = CalibrationResult::new(1e-8, 1e-9, 6.0).unwrap();
    let est: Vec<(f64, f64, f64)> = (0..60).map(|k| (k as f64, 1e-6, 1e-6)).collect();
    let cfg = DetectorConfig {
        warmup: 30.0,
        confirm: 1,
    };
    let v = detect_series(&est, &cal, &cfg);
    assert!(v.iter().take(30).all(|v| !v.any_alarm()));
    assert!(v
        .iter()
        .skip(30)
        .all(|v| v.classification == Classification::ActiveAttack));
}

#[test]
fn confirmation_delays_flags() {
    let cal = CalibrationResult::new(1e-8, 1e-9, 6.0).unwrap();
    let est: Vec<(f64, f64, f64)> = (0..10)
        .map(|k| (k as f64, if k == 3 || k >= 6 { 1e-6 } else { 0.0 }, 0.0))
        .collect();
    let cfg = DetectorConfig {
        warmup: 0.0,
        confirm: 3,
    };
    let alarms: Vec<bool> = detect_series(&est, &cal, &cfg)
        .iter()
        .map(|v| v.phase_alarm)
        .collect();
    assert_eq!(
        alarms,
        [false, false, false, false, false, false, false, false, true, true]
    );
}

#[test]
fn static_benign_long_run_has_at_most_one_false_positive() {
    let cfg = preset("static-benign").unwrap();
    let cal = calibrate_scenario(&cfg, DEFAULT_MULTIPLIER, DEFAULT_WARMUP).unwrap();
    let run = run_scenario(&cfg, &cal, &DetectorConfig::default()).unwrap();
    assert!(run.metrics.false_positive_count <= 1, "{:?}", run.metrics);
}

#[test]
fn too_few_calibration_samples() {
    let pairs = benign_pairs(0);
    assert!(matches!(
        calibrate(&pairs[..MIN_CALIBRATION_SAMPLES - 1], 6.0),
        Err(clockwatch::Error::InsufficientData { .. })
    ));
}

proptest! {
    #[test]
    fn thresholds_are_multiplier_times_sigma(seed in 0u64..1000, m in 0.5f64..20.0) {
        let cal = calibrate(&benign_pairs(seed), m).unwrap();
        prop_assert!((cal.phase_threshold() - m * cal.sigma_theta).abs() <= 1e-15 * cal.phase_threshold());
        prop_assert!((cal.frequency_threshold() - m * cal.sigma_gamma).abs() <= 1e-15 * cal.frequency_threshold());
    }

    #[test]
    fn larger_multiplier_never_adds_alarms(
        est in prop::collection::vec((-5e-7f64..5e-7, -2e-8f64..2e-8), 10..200),
        m1 in 1.0f64..10.0,
        dm in 0.0f64..10.0,
    ) {
        let lo = CalibrationResult::new(5e-8, 1.4e-9, m1).unwrap();
        let hi = lo.with_multiplier(m1 + dm).unwrap();
        let triples: Vec<_> = est.iter().enumerate().map(|(k, (t, g))| (k as f64, *t, *g)).collect();
        let cfg = DetectorConfig { warmup: 0.0, confirm: 1 };
        let a = detect_series(&triples, &lo, &cfg);
        let b = detect_series(&triples, &hi, &cfg);
        for (x, y) in a.iter().zip(&b) {
            prop_assert!(x.phase_alarm || !y.phase_alarm);
            prop_assert!(x.freq_alarm || !y.freq_alarm);
        }
    }

    #[test]
    fn calibration_is_scale_invariant(seed in 0u64..1000, c in 1e-3f64..1e3) {
        let pairs = benign_pairs(seed);
        let scaled: Vec<_> = pairs.iter().map(|(t, g)| (t * c, g * c)).collect();
        let a = calibrate(&pairs, 6.0).unwrap();
        let b = calibrate(&scaled, 6.0).unwrap();
        prop_assert!((b.sigma_theta / (c * a.sigma_theta) - 1.0).abs() < 1e-12);
        prop_assert!((b.sigma_gamma / (c * a.sigma_gamma) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn tests_are_strict(sigma in 1e-9f64..1e-7, m in 1.0f64..10.0) {
        let cal = CalibrationResult::new(sigma, sigma, m).unwrap();
        let th = cal.phase_threshold();
        prop_assert!(!phase_test(th, &cal));
        prop_assert!(!phase_test(-th, &cal));
        prop_assert!(phase_test(th * (1.0 + 1e-12), &cal));
        prop_assert!(!frequency_test(cal.frequency_threshold(), &cal));
    }
}
