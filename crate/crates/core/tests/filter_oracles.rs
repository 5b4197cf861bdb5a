mod common;

use clockwatch::clock::NoiseSpec;
use clockwatch::filter::*;
use clockwatch::linalg::check_covariance;
use clockwatch::pipeline::track_trace;
use clockwatch::scenario::{preset, simulate};
use common::*;
use nalgebra::DVector;
use proptest::prelude::*;

#[test]
fn frozen_three_clock_reference() {
    // Independent NumPy run: full-frame filter, standard-form update, no projection.
    let specs = vec![
        NoiseSpec::new(1e-18, 1e-20, 0.0),
        NoiseSpec::new(2.5e-19, 1e-26, 1e-33),
        NoiseSpec::new(2.5e-19, 1e-26, 1e-33),
    ];
    let filter = EnsembleFilter::new(FilterModel::new(specs, 1.0, 2e-18)).unwrap();
    let z: Vec<MeasurementVector> = (0..20)
        .map(|k| {
            let k = k as f64;
            MeasurementVector::new(vec![
                1e-8 * (0.3 * k).sin() + 2e-9 * k,
                -5e-9 * (0.2 * k).cos() + 2e-9 * k,
            ])
        })
        .collect();
    let mut last_nis = 0.0;
    let state = run_filter(&filter, &z, |_, _, rec| last_nis = rec.nis);
    let d = gnss_differential_estimate(&state);
    assert!(
        (d.theta_hat / 3.681320185897789e-08 - 1.0).abs() < 1e-8,
        "{}",
        d.theta_hat
    );
    assert!(
        (d.gamma_hat / 1.966801196308708e-09 - 1.0).abs() < 1e-8,
        "{}",
        d.gamma_hat
    );
    assert!(
        (last_nis / 9.765948438970556 - 1.0).abs() < 1e-8,
        "{last_nis}"
    );
}

#[test]
fn two_clock_filter_matches_scalar_difference_filter() {
    let gnss = NoiseSpec::new(1.8e-15, 1e-18, 0.0);
    let local = NoiseSpec::new(2.5e-19, 1e-26, 0.0);
    let r = 2e-18;
    let p0 = [1e-12, 1e-16, 0.0];
    let model = FilterModel::new(vec![gnss, local], 1.0, r).with_initial_variance(p0);
    let filter = EnsembleFilter::new(model).unwrap();
    let run = consistent_run(&[gnss, local], r, 1000, 31);

    let mut oracle = ScalarDifferenceFilter::new(&gnss, &local, [p0[0], p0[1]], r);
    run_filter(&filter, &run.measurements, |k, s, _| {
        if k > 0 {
            oracle.predict();
        }
        oracle.update(run.measurements[k].z[0]);
        let d = gnss_differential_estimate(s);
        let tol_t = 1e-10 * (oracle.x[0].abs() + oracle.p[0][0].sqrt());
        let tol_g = 1e-10 * (oracle.x[1].abs() + oracle.p[1][1].sqrt());
        assert!(
            (d.theta_hat - oracle.x[0]).abs() <= tol_t,
            "step {k}: theta {} vs {}",
            d.theta_hat,
            oracle.x[0]
        );
        assert!(
            (d.gamma_hat - oracle.x[1]).abs() <= tol_g,
            "step {k}: gamma {} vs {}",
            d.gamma_hat,
            oracle.x[1]
        );
        assert!(
            (d.theta_var / oracle.p[0][0] - 1.0).abs() < 1e-8,
            "step {k}: variance"
        );
    });
}

fn consistent_specs() -> Vec<NoiseSpec> {
    vec![
        NoiseSpec::new(2e-18, 1e-20, 0.0),
        NoiseSpec::new(2.5e-19, 1e-24, 0.0),
        NoiseSpec::new(2.5e-19, 1e-24, 0.0),
        NoiseSpec::new(5e-19, 4e-24, 0.0),
    ]
}

#[test]
fn benign_nis_and_whiteness() {
    let specs = consistent_specs();
    let r = 2e-18;
    let burn_in = 100;
    let n = 1000;
    let run = consistent_run(&specs, r, burn_in + n, 8);
    let filter = EnsembleFilter::new(FilterModel::new(specs.clone(), 1.0, r)).unwrap();
    let mut nis = Vec::new();
    let mut innov: Vec<DVector<f64>> = Vec::new();
    run_filter(&filter, &run.measurements, |k, _, rec| {
        if k >= burn_in {
            nis.push(rec.nis);
            innov.push(rec.innovation.clone());
        }
    });
    let dof = (specs.len() - 1) as f64;
    let mean = nis.iter().sum::<f64>() / n as f64;
    let lo = chi2_quantile(dof * n as f64, -1.959964) / n as f64;
    let hi = chi2_quantile(dof * n as f64, 1.959964) / n as f64;
    assert!(
        mean > lo && mean < hi,
        "mean NIS {mean} outside [{lo}, {hi}]"
    );

    let bound = 3.0 / (n as f64).sqrt();
    for c in 0..specs.len() - 1 {
        let v: Vec<f64> = innov.iter().map(|i| i[c]).collect();
        let m = v.iter().sum::<f64>() / n as f64;
        let var: f64 = v.iter().map(|x| (x - m).powi(2)).sum();
        let lag1: f64 = v.windows(2).map(|w| (w[0] - m) * (w[1] - m)).sum();
        let rho = lag1 / var;
        assert!(
            rho.abs() < bound,
            "component {c}: lag-1 autocorrelation {rho}"
        );
    }
}

#[test]
fn covariance_stays_bounded_over_long_runs() {
    let specs = vec![
        NoiseSpec::new(2e-18, 1e-20, 0.0),
        NoiseSpec::new(2.5e-19, 1e-26, 1e-33),
        NoiseSpec::new(2.5e-19, 1e-26, 1e-33),
        NoiseSpec::new(2.5e-19, 1e-26, 1e-33),
    ];
    let filter = EnsembleFilter::new(FilterModel::new(specs, 1.0, 2e-18)).unwrap();
    let z = MeasurementVector::new(vec![0.0; 3]);
    let mut state = filter.initial_state();
    let mut at_100 = 0.0;
    let mut worst = 0.0f64;
    for k in 0..100_000 {
        state = filter.step(&state, Some(&z)).unwrap().0;
        let max_diag = state.p.diagonal().max();
        if k == 99 {
            at_100 = max_diag;
        }
        worst = worst.max(max_diag);
    }
    check_covariance(&state.p).unwrap();
    assert!(
        worst < 1e6 * at_100,
        "max diagonal {worst:e} vs 100-step {at_100:e}"
    );
}

#[test]
fn static_benign_estimate_stays_inside_reference_threshold() {
    let cfg = preset("static-benign").unwrap();
    let est = track_trace(&cfg, &simulate(&cfg).unwrap()).unwrap();
    let threshold = 6.0 * 5.5834e-08;
    for (t, e) in est
        .epochs
        .iter()
        .zip(&est.estimates)
        .filter(|(t, _)| **t >= 30.0)
    {
        assert!(
            e.theta_hat.abs() < threshold,
            "t = {t}: theta_hat {}",
            e.theta_hat
        );
    }
}

#[test]
fn ramp_is_tracked_after_the_lift() {
    let cfg = preset("texbat2-like").unwrap();
    let traces = simulate(&cfg).unwrap();
    let est = track_trace(&cfg, &traces).unwrap();
    for (k, e) in est
        .estimates
        .iter()
        .enumerate()
        .filter(|(k, _)| traces.epochs[*k] > 160.0)
    {
        let truth = traces.attack_truth[k];
        assert!(
            (e.theta_hat - truth).abs() <= 0.1 * truth,
            "t = {}: {} vs {truth}",
            traces.epochs[k],
            e.theta_hat
        );
    }
}

proptest! {
    #[test]
    fn differential_is_invariant_to_common_mode(
        x in prop::collection::vec(-1e-6f64..1e-6, 12),
        shift in prop::collection::vec(-1e-3f64..1e-3, 3),
    ) {
        let p = nalgebra::DMatrix::identity(12, 12);
        let base = FilterState { x_hat: DVector::from_vec(x.clone()), p: p.clone(), epoch: 0.0 };
        let moved: Vec<f64> = x.iter().enumerate().map(|(i, v)| v + shift[i % 3]).collect();
        let moved = FilterState { x_hat: DVector::from_vec(moved), p, epoch: 0.0 };
        let a = gnss_differential_estimate(&base);
        let b = gnss_differential_estimate(&moved);
        prop_assert!((a.theta_hat - b.theta_hat).abs() < 1e-15);
        prop_assert!((a.gamma_hat - b.gamma_hat).abs() < 1e-15);
    }

    #[test]
    fn rebase_keeps_differentials(x in prop::collection::vec(-1e-6f64..1e-6, 12)) {
        let filter = EnsembleFilter::new(FilterModel::new(consistent_specs(), 1.0, 1e-18)).unwrap();
        let mut state = filter.initial_state();
        state.x_hat = DVector::from_vec(x);
        let before = gnss_differential_estimate(&state);
        let after = gnss_differential_estimate(&filter.rebase(&state));
        prop_assert!((before.theta_hat - after.theta_hat).abs() < 1e-15);
        prop_assert!((before.gamma_hat - after.gamma_hat).abs() < 1e-15);
        check_covariance(&filter.rebase(&state).p).unwrap();
    }
}
