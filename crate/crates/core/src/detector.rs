//! Dual phase/frequency tests on the GNSS differential estimate.
//!
//! A phase alarm fires when `|θ̂| > k·σθ` and a frequency alarm when
//! `|γ̂| > k·σγ`. The pair of flags maps onto four outcomes:
//!
//! | phase | frequency | outcome            |
//! |-------|-----------|--------------------|
//! | yes   | yes       | `ActiveAttack`     |
//! | yes   | no        | `PersistentOffset` |
//! | no    | yes       | `FrequencyAnomaly` |
//! | no    | no        | `Nominal`          |
//!
//! The filter cannot see an offset that was already present when it started,
//! so an attack that predates the first epoch stays invisible to the phase
//! test. Reports flag this case instead of guessing.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Threshold multiplier used unless overridden.
pub const DEFAULT_MULTIPLIER: f64 = 6.0;
/// Minimum number of benign estimates for a calibration.
pub const MIN_CALIBRATION_SAMPLES: usize = 100;
/// Seconds after filter start during which no alarm is raised.
pub const DEFAULT_WARMUP: f64 = 30.0;

/// Benign spread of the differential estimates and the threshold multiplier.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CalibrationResult {
    /// Seconds.
    pub sigma_theta: f64,
    /// s/s.
    pub sigma_gamma: f64,
    #[serde(default = "default_multiplier")]
    pub multiplier: f64,
}

fn default_multiplier() -> f64 {
    DEFAULT_MULTIPLIER
}

impl CalibrationResult {
    pub fn new(sigma_theta: f64, sigma_gamma: f64, multiplier: f64) -> Result<Self> {
        let cal = Self {
            sigma_theta,
            sigma_gamma,
            multiplier,
        };
        cal.validate()?;
        Ok(cal)
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("sigma_theta", self.sigma_theta),
            ("sigma_gamma", self.sigma_gamma),
            ("multiplier", self.multiplier),
        ] {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::invalid(format!("{name} must be positive, got {v}")));
            }
        }
        Ok(())
    }

    pub fn with_multiplier(self, multiplier: f64) -> Result<Self> {
        Self::new(self.sigma_theta, self.sigma_gamma, multiplier)
    }

    pub fn phase_threshold(&self) -> f64 {
        self.multiplier * self.sigma_theta
    }

    pub fn frequency_threshold(&self) -> f64 {
        self.multiplier * self.sigma_gamma
    }
}

fn sample_std(v: impl Iterator<Item = f64> + Clone) -> f64 {
    let n = v.clone().count() as f64;
    let mean = v.clone().sum::<f64>() / n;
    (v.map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt()
}

/// Calibrates from benign `(θ̂, γ̂)` estimates.
pub fn calibrate(benign_estimates: &[(f64, f64)], multiplier: f64) -> Result<CalibrationResult> {
    if benign_estimates.len() < MIN_CALIBRATION_SAMPLES {
        return Err(Error::InsufficientData {
            required: MIN_CALIBRATION_SAMPLES,
            actual: benign_estimates.len(),
        });
    }
    if benign_estimates
        .iter()
        .any(|(t, g)| !t.is_finite() || !g.is_finite())
    {
        return Err(Error::invalid("calibration estimates must be finite"));
    }
    let sigma_theta = sample_std(benign_estimates.iter().map(|e| e.0));
    let sigma_gamma = sample_std(benign_estimates.iter().map(|e| e.1));
    if sigma_theta == 0.0 || sigma_gamma == 0.0 {
        return Err(Error::invalid(
            "benign estimates have zero variance; calibration is degenerate",
        ));
    }
    CalibrationResult::new(sigma_theta, sigma_gamma, multiplier)
}

/// True iff `|theta_hat|` exceeds the phase threshold.
pub fn phase_test(theta_hat: f64, cal: &CalibrationResult) -> bool {
    theta_hat.abs() > cal.phase_threshold()
}

/// True iff `|gamma_hat|` exceeds the frequency threshold.
pub fn frequency_test(gamma_hat: f64, cal: &CalibrationResult) -> bool {
    gamma_hat.abs() > cal.frequency_threshold()
}

/// Outcome of the dual test at one epoch.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Classification {
    Nominal,
    ActiveAttack,
    PersistentOffset,
    FrequencyAnomaly,
}

impl Classification {
    pub fn as_str(&self) -> &'static str {
        match self {
            Classification::Nominal => "Nominal",
            Classification::ActiveAttack => "ActiveAttack",
            Classification::PersistentOffset => "PersistentOffset",
            Classification::FrequencyAnomaly => "FrequencyAnomaly",
        }
    }
}

impl std::fmt::Display for Classification {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

pub fn classify(phase_alarm: bool, freq_alarm: bool) -> Classification {
    match (phase_alarm, freq_alarm) {
        (true, true) => Classification::ActiveAttack,
        (true, false) => Classification::PersistentOffset,
        (false, true) => Classification::FrequencyAnomaly,
        (false, false) => Classification::Nominal,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DetectionVerdict {
    pub epoch: f64,
    pub phase_alarm: bool,
    pub freq_alarm: bool,
    pub classification: Classification,
}

impl DetectionVerdict {
    pub fn new(epoch: f64, phase_alarm: bool, freq_alarm: bool) -> Self {
        Self {
            epoch,
            phase_alarm,
            freq_alarm,
            classification: classify(phase_alarm, freq_alarm),
        }
    }

    pub fn any_alarm(&self) -> bool {
        self.phase_alarm || self.freq_alarm
    }
}

/// Alarm gating shared by every epoch of a run.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DetectorConfig {
    /// Seconds after the first epoch during which alarms are suppressed.
    pub warmup: f64,
    /// Consecutive raw exceedances required before a flag is raised.
    pub confirm: usize,
}

impl Default for DetectorConfig {
    fn default() -> Self {
        Self {
            warmup: DEFAULT_WARMUP,
            confirm: 1,
        }
    }
}

/// Streaming detector fed one estimate per epoch.
#[derive(Debug, Clone)]
pub struct Detector {
    cal: CalibrationResult,
    config: DetectorConfig,
    start: Option<f64>,
    phase_run: usize,
    freq_run: usize,
}

impl Detector {
    pub fn new(cal: CalibrationResult, config: DetectorConfig) -> Self {
        Self {
            cal,
            config,
            start: None,
            phase_run: 0,
            freq_run: 0,
        }
    }

    pub fn calibration(&self) -> &CalibrationResult {
        &self.cal
    }

    pub fn observe(&mut self, epoch: f64, theta_hat: f64, gamma_hat: f64) -> DetectionVerdict {
        let start = *self.start.get_or_insert(epoch);
        if epoch - start < self.config.warmup {
            return DetectionVerdict::new(epoch, false, false);
        }
        self.phase_run = if phase_test(theta_hat, &self.cal) {
            self.phase_run + 1
        } else {
            0
        };
        self.freq_run = if frequency_test(gamma_hat, &self.cal) {
            self.freq_run + 1
        } else {
            0
        };
        let k = self.config.confirm.max(1);
        DetectionVerdict::new(epoch, self.phase_run >= k, self.freq_run >= k)
    }
}

/// Runs the detector over `(epoch, θ̂, γ̂)` triples.
pub fn detect_series(
    estimates: &[(f64, f64, f64)],
    cal: &CalibrationResult,
    config: &DetectorConfig,
) -> Vec<DetectionVerdict> {
    let mut det = Detector::new(*cal, *config);
    estimates
        .iter()
        .map(|&(t, th, g)| det.observe(t, th, g))
        .collect()
}

/// Detection metrics for one run.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct RunMetrics {
    /// First alarm at or after the attack start, or the first alarm of a benign run.
    pub first_alarm_epoch: Option<f64>,
    pub detection_latency: Option<f64>,
    /// Injected offset at the first phase alarm after the attack start, seconds.
    pub offset_at_detection: Option<f64>,
    /// Alarmed epochs before the attack start (all alarmed epochs for benign runs).
    pub false_positive_count: usize,
    /// Phase-alarmed epochs among the false positives.
    pub false_phase_alarm_count: usize,
}

pub fn evaluate_run(
    verdicts: &[DetectionVerdict],
    attack_truth: &[f64],
    attack_start: Option<f64>,
) -> Result<RunMetrics> {
    if verdicts.len() != attack_truth.len() {
        return Err(Error::invalid(format!(
            "verdicts ({}) and attack truth ({}) are not aligned",
            verdicts.len(),
            attack_truth.len()
        )));
    }
    let is_attack = |v: &DetectionVerdict| attack_start.is_some_and(|s| v.epoch >= s);
    let mut m = RunMetrics::default();
    for v in verdicts.iter().filter(|v| !is_attack(v)) {
        if v.any_alarm() {
            m.false_positive_count += 1;
        }
        if v.phase_alarm {
            m.false_phase_alarm_count += 1;
        }
    }
    match attack_start {
        None => {
            m.first_alarm_epoch = verdicts.iter().find(|v| v.any_alarm()).map(|v| v.epoch);
        }
        Some(start) => {
            m.first_alarm_epoch = verdicts
                .iter()
                .find(|v| is_attack(v) && v.any_alarm())
                .map(|v| v.epoch);
            m.detection_latency = m.first_alarm_epoch.map(|t| t - start);
            m.offset_at_detection = verdicts
                .iter()
                .zip(attack_truth)
                .find(|(v, _)| is_attack(v) && v.phase_alarm)
                .map(|(_, a)| *a);
        }
    }
    Ok(m)
}
