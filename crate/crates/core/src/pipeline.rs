//! End-to-end runs: simulate, track, calibrate and detect.

use serde::{Deserialize, Serialize};

use crate::detector::{
    calibrate, detect_series, evaluate_run, CalibrationResult, DetectionVerdict, DetectorConfig,
    RunMetrics,
};
use crate::error::{Error, Result};
use crate::filter::{
    gnss_differential_estimate, DifferentialEstimate, EnsembleFilter, FilterModel,
    MeasurementVector,
};
use crate::scenario::presets::CALIBRATION_DURATION;
use crate::scenario::{measure, simulate, ScenarioConfig, TraceSet};

/// Seed offset separating a scenario's calibration run from its attack runs.
pub const CALIBRATION_SEED_OFFSET: u64 = 1_000_003;

/// Differential estimates and NIS per epoch.
#[derive(Debug, Clone, PartialEq)]
pub struct EstimateSeries {
    pub epochs: Vec<f64>,
    pub estimates: Vec<DifferentialEstimate>,
    /// `None` at epochs without a measurement.
    pub nis: Vec<Option<f64>>,
}

impl EstimateSeries {
    /// `(epoch, θ̂, γ̂)` triples for the detector.
    pub fn triples(&self) -> Vec<(f64, f64, f64)> {
        self.epochs
            .iter()
            .zip(&self.estimates)
            .map(|(t, e)| (*t, e.theta_hat, e.gamma_hat))
            .collect()
    }

    /// `(θ̂, γ̂)` pairs at epochs at least `warmup` seconds after the first.
    pub fn settled_pairs(&self, warmup: f64) -> Vec<(f64, f64)> {
        let t0 = self.epochs.first().copied().unwrap_or(0.0);
        self.epochs
            .iter()
            .zip(&self.estimates)
            .filter(|(t, _)| **t - t0 >= warmup)
            .map(|(_, e)| (e.theta_hat, e.gamma_hat))
            .collect()
    }
}

/// Runs the filter over a measurement sequence.
///
/// The first measurement updates the initial state directly. Gaps of several
/// nominal steps are bridged by repeated predictions, and epochs without a
/// measurement are predict-only.
pub fn track(
    model: FilterModel,
    epochs: &[f64],
    measurements: &[Option<MeasurementVector>],
) -> Result<EstimateSeries> {
    if epochs.len() != measurements.len() {
        return Err(Error::invalid("epochs and measurements are not aligned"));
    }
    let tau = model.tau;
    let filter = EnsembleFilter::new(model)?;
    let mut state = filter.initial_state();
    let mut out = EstimateSeries {
        epochs: Vec::with_capacity(epochs.len()),
        estimates: Vec::with_capacity(epochs.len()),
        nis: Vec::with_capacity(epochs.len()),
    };
    for (k, (&t, z)) in epochs.iter().zip(measurements).enumerate() {
        if k == 0 {
            state.epoch = t;
        } else {
            let steps = ((t - epochs[k - 1]) / tau).round();
            if steps < 1.0 {
                return Err(Error::invalid(format!(
                    "epoch {t} is less than one step after {}",
                    epochs[k - 1]
                )));
            }
            for _ in 0..steps as usize {
                state = filter.predict(&state)?;
            }
            state.epoch = t;
        }
        let mut nis = None;
        if let Some(z) = z {
            let (s, rec) = filter.update(&state, z)?;
            state = s;
            nis = Some(rec.nis);
        }
        out.epochs.push(t);
        out.estimates.push(gnss_differential_estimate(&state));
        out.nis.push(nis);
    }
    Ok(out)
}

/// Tracks a simulated trace through the scenario's measurement chain.
pub fn track_trace(config: &ScenarioConfig, traces: &TraceSet) -> Result<EstimateSeries> {
    if traces.n_local() != config.local_clocks.len() {
        return Err(Error::invalid(format!(
            "trace has {} local clocks, config describes {}",
            traces.n_local(),
            config.local_clocks.len()
        )));
    }
    let z: Vec<Option<MeasurementVector>> = measure(traces, config.quantization)
        .into_iter()
        .map(Some)
        .collect();
    track(config.filter_model(), &traces.epochs, &z)
}

/// Calibration from a benign trace, skipping the warm-up.
pub fn calibrate_from_trace(
    config: &ScenarioConfig,
    benign: &TraceSet,
    multiplier: f64,
    warmup: f64,
) -> Result<CalibrationResult> {
    let est = track_trace(config, benign)?;
    calibrate(&est.settled_pairs(warmup), multiplier)
}

/// Benign companion of `config` used for calibration: same clocks, no attack,
/// a long record and a disjoint seed.
pub fn calibration_config(config: &ScenarioConfig) -> ScenarioConfig {
    let mut cfg = config.benign();
    cfg.duration = cfg.duration.max(CALIBRATION_DURATION);
    cfg.seed = config.seed.wrapping_add(CALIBRATION_SEED_OFFSET);
    cfg
}

/// Simulates the benign companion of `config` and calibrates on it.
pub fn calibrate_scenario(
    config: &ScenarioConfig,
    multiplier: f64,
    warmup: f64,
) -> Result<CalibrationResult> {
    let cfg = calibration_config(config);
    calibrate_from_trace(&cfg, &simulate(&cfg)?, multiplier, warmup)
}

/// Everything produced by one simulated detection run.
#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub traces: TraceSet,
    pub estimates: EstimateSeries,
    pub verdicts: Vec<DetectionVerdict>,
    pub metrics: RunMetrics,
}

/// Detection over an existing trace.
pub fn detect_trace(
    config: &ScenarioConfig,
    traces: TraceSet,
    cal: &CalibrationResult,
    detector: &DetectorConfig,
) -> Result<RunOutcome> {
    let estimates = track_trace(config, &traces)?;
    let verdicts = detect_series(&estimates.triples(), cal, detector);
    let metrics = evaluate_run(&verdicts, &traces.attack_truth, config.attack.start())?;
    Ok(RunOutcome {
        traces,
        estimates,
        verdicts,
        metrics,
    })
}

/// Simulates `config` and runs detection with `cal`.
pub fn run_scenario(
    config: &ScenarioConfig,
    cal: &CalibrationResult,
    detector: &DetectorConfig,
) -> Result<RunOutcome> {
    detect_trace(config, simulate(config)?, cal, detector)
}

/// Median and interquartile range of a sample.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub count: usize,
    pub median: f64,
    pub q1: f64,
    pub q3: f64,
}

impl Summary {
    pub fn iqr(&self) -> f64 {
        self.q3 - self.q1
    }
}

fn quantile(sorted: &[f64], q: f64) -> f64 {
    let pos = q * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    sorted[lo] + (sorted[hi] - sorted[lo]) * (pos - lo as f64)
}

/// Linear-interpolation quartiles; `None` for an empty sample.
pub fn summarize(values: &[f64]) -> Option<Summary> {
    if values.is_empty() {
        return None;
    }
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    Some(Summary {
        count: v.len(),
        median: quantile(&v, 0.5),
        q1: quantile(&v, 0.25),
        q3: quantile(&v, 0.75),
    })
}
