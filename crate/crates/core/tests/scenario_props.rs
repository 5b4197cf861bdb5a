use clockwatch::detector::DEFAULT_WARMUP;
use clockwatch::pipeline::calibrate_scenario;
use clockwatch::scenario::presets::{MOBILE_SIGMAS, STATIC_SIGMAS};
use clockwatch::scenario::*;
use proptest::prelude::*;

#[test]
fn same_seed_same_trace() {
    let cfg = preset("texbat2-like").unwrap();
    let a = simulate(&cfg).unwrap();
    let b = simulate(&cfg).unwrap();
    assert_eq!(a.gnss_phase, b.gnss_phase);
    assert_eq!(a.local_phases, b.local_phases);
    let mut other = cfg.clone();
    other.seed += 1;
    assert_ne!(simulate(&other).unwrap().gnss_phase, a.gnss_phase);
}

#[test]
fn attack_superposes_on_benign_trace() {
    for name in ["texbat2-like", "texbat5-like", "texbat3-like"] {
        let cfg = preset(name).unwrap();
        let attacked = simulate(&cfg).unwrap();
        let benign = simulate(&cfg.benign()).unwrap();
        assert_eq!(attacked.local_phases, benign.local_phases);
        for k in 0..attacked.len() {
            let diff = attacked.gnss_phase[k] - benign.gnss_phase[k];
            let scale = attacked.gnss_phase[k].abs().max(benign.gnss_phase[k].abs());
            assert!(
                (diff - attacked.attack_truth[k]).abs() <= 4.0 * f64::EPSILON * scale,
                "{name} epoch {k}"
            );
        }
    }
}

#[test]
fn freq_impulse_leaves_constant_net_phase() {
    let p = AttackProfile::FreqImpulse {
        start: 150.0,
        impulse_amplitude: 4e-8,
        impulse_duration: 2.0,
    };
    assert_eq!(attack_offset(&p, 149.0), 0.0);
    assert!((attack_offset(&p, 151.0) - 4e-8).abs() < 1e-20);
    for t in [152.0, 160.0, 500.0, 1e4] {
        assert!((attack_offset(&p, t) - 8e-8).abs() < 1e-20, "t = {t}");
    }
}

#[test]
fn quantization_error_is_uniform() {
    let mut cfg = preset("static-benign").unwrap();
    cfg.quantization = 5e-9;
    let traces = simulate(&cfg).unwrap();
    let z = measure(&traces, cfg.quantization);
    let mut sum = 0.0;
    let mut n = 0usize;
    for (k, m) in z.iter().enumerate() {
        for (i, v) in m.z.iter().enumerate() {
            let exact = traces.gnss_phase[k] - traces.local_phases[i][k];
            sum += (v - exact).powi(2);
            n += 1;
        }
    }
    let rms = (sum / n as f64).sqrt();
    let expected = cfg.quantization / 12f64.sqrt();
    assert!(
        (rms / expected - 1.0).abs() < 0.1,
        "rms {rms:e} vs {expected:e}"
    );
}

#[test]
fn calibration_matches_reference_sigmas() {
    for (name, (theta, gamma)) in [
        ("static-benign", STATIC_SIGMAS),
        ("mobile-benign", MOBILE_SIGMAS),
    ] {
        let cal = calibrate_scenario(&preset(name).unwrap(), 6.0, DEFAULT_WARMUP).unwrap();
        assert!(
            (cal.sigma_theta / theta - 1.0).abs() < 0.3,
            "{name}: sigma_theta {:e}",
            cal.sigma_theta
        );
        assert!(
            (cal.sigma_gamma / gamma - 1.0).abs() < 0.3,
            "{name}: sigma_gamma {:e}",
            cal.sigma_gamma
        );
    }
}

#[test]
fn short_duration_is_rejected() {
    let mut cfg = preset("static-benign").unwrap();
    cfg.duration = 9.0;
    let err = simulate(&cfg).unwrap_err().to_string();
    assert!(err.contains("10 * tau"), "{err}");
}

#[test]
fn presets_round_trip_through_toml() {
    for name in presets::PRESET_NAMES {
        let cfg = preset(name).unwrap();
        assert_eq!(ScenarioConfig::from_toml(&cfg.to_toml()).unwrap(), cfg);
    }
}

#[test]
fn trace_csv_round_trip_is_exact() {
    let cfg = preset("texbat3-like").unwrap();
    let traces = simulate(&cfg).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("trace.csv");
    save_trace_csv(&traces, &path).unwrap();
    assert_eq!(load_trace_csv(&path).unwrap(), traces);
}

proptest! {
    #[test]
    fn ramp_is_monotone_and_capped(
        start in 0.0f64..500.0,
        target in 1e-8f64..1e-5,
        rate in 1e-10f64..1e-7,
        times in prop::collection::vec(0.0f64..2e4, 2..50),
    ) {
        let p = AttackProfile::Ramp { start, target_offset: target, pull_rate: rate };
        let mut ts = times;
        ts.sort_by(f64::total_cmp);
        let mut prev = 0.0;
        for t in ts {
            let a = attack_offset(&p, t);
            prop_assert!(a >= prev);
            prop_assert!(a <= target);
            if t < start {
                prop_assert_eq!(a, 0.0);
            }
            prev = a;
        }
        prop_assert_eq!(attack_offset(&p, start + target / rate + 1.0), target);
    }

    #[test]
    fn step_is_zero_then_target(start in 0.0f64..1e3, target in -1e-5f64..1e-5, t in 0.0f64..2e3) {
        let p = AttackProfile::Step { start, target_offset: target };
        let a = attack_offset(&p, t);
        prop_assert_eq!(a, if t < start { 0.0 } else { target });
    }

    #[test]
    fn grid_rounding_error_is_bounded(x in -1e-3f64..1e-3, q in 1e-10f64..1e-8) {
        let r = round_to_grid(x, q);
        prop_assert!((r - x).abs() <= 0.5 * q * (1.0 + 1e-9));
    }
}
