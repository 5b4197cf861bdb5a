use std::path::Path;

use serde::{Deserialize, Serialize};

use super::attack::AttackProfile;
use crate::clock::NoiseSpec;
use crate::error::{Error, Result};
use crate::filter::{FilterModel, DEFAULT_INITIAL_VARIANCE};

/// Output model of the GNSS-disciplined clock.
///
/// The benign phase error is white noise plus an optional wander that the
/// receiver's steering loop pulls back toward constellation time at
/// `steering_gain`. The wander is off by default.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GnssClockModel {
    /// White discipline error, seconds.
    #[serde(default = "default_benign_sigma")]
    pub benign_phase_sigma: f64,
    /// Mean-reversion rate of the steered wander, 1/s.
    #[serde(default = "default_steering_gain")]
    pub steering_gain: f64,
    /// Stationary standard deviation of the steered wander, seconds.
    #[serde(default)]
    pub wander_sigma: f64,
    /// Frequency density the filter assigns to the GNSS clock, (s/s)²/s.
    #[serde(default = "default_tracking_q_gamma")]
    pub tracking_q_gamma: f64,
}

fn default_benign_sigma() -> f64 {
    3e-8
}

fn default_steering_gain() -> f64 {
    1.0 / 300.0
}

fn default_tracking_q_gamma() -> f64 {
    1e-18
}

impl Default for GnssClockModel {
    fn default() -> Self {
        Self {
            benign_phase_sigma: default_benign_sigma(),
            steering_gain: default_steering_gain(),
            wander_sigma: 0.0,
            tracking_q_gamma: default_tracking_q_gamma(),
        }
    }
}

impl GnssClockModel {
    pub fn validate(&self) -> Result<()> {
        let nonneg = |name: &str, v: f64| {
            if v.is_finite() && v >= 0.0 {
                Ok(())
            } else {
                Err(Error::invalid(format!(
                    "gnss.{name} must be non-negative, got {v}"
                )))
            }
        };
        nonneg("benign_phase_sigma", self.benign_phase_sigma)?;
        nonneg("wander_sigma", self.wander_sigma)?;
        nonneg("tracking_q_gamma", self.tracking_q_gamma)?;
        if !(self.steering_gain.is_finite() && self.steering_gain > 0.0) {
            return Err(Error::invalid(format!(
                "gnss.steering_gain must be positive, got {}",
                self.steering_gain
            )));
        }
        Ok(())
    }

    /// Noise densities the filter uses for the GNSS slot at step `tau`.
    ///
    /// The phase density reproduces the one-step variance of the simulated
    /// phase increment: twice the white variance plus the increment variance
    /// of the steered wander.
    pub fn filter_spec(&self, tau: f64) -> NoiseSpec {
        let white = 2.0 * self.benign_phase_sigma.powi(2);
        let wander = 2.0 * self.wander_sigma.powi(2) * (1.0 - (-self.steering_gain * tau).exp());
        NoiseSpec::new((white + wander) / tau, self.tracking_q_gamma, 0.0)
    }
}

/// Optional filter tuning overrides.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FilterTuning {
    /// Measurement-noise variance, s². Defaults to `quantization² / 12`.
    pub r_diag: Option<f64>,
    /// Initial covariance diagonal per clock (phase, frequency, drift).
    pub initial_variance: Option<[f64; 3]>,
}

/// Floor on the measurement-noise variance when quantization is disabled, s².
pub const MIN_R_DIAG: f64 = 1e-22;

/// Declarative description of one simulated run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    /// Seconds.
    pub duration: f64,
    /// Sampling interval, seconds.
    #[serde(default = "default_tau")]
    pub tau: f64,
    /// Phase-detector resolution, seconds; 0 disables quantization.
    #[serde(default = "default_quantization")]
    pub quantization: f64,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub gnss: GnssClockModel,
    #[serde(default)]
    pub attack: AttackProfile,
    #[serde(default)]
    pub filter: FilterTuning,
    pub local_clocks: Vec<NoiseSpec>,
}

fn default_tau() -> f64 {
    1.0
}

fn default_quantization() -> f64 {
    5e-9
}

impl ScenarioConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.tau.is_finite() && self.tau > 0.0) {
            return Err(Error::invalid(format!(
                "tau must be positive, got {}",
                self.tau
            )));
        }
        if !(self.duration.is_finite() && self.duration >= 10.0 * self.tau) {
            return Err(Error::invalid(format!(
                "duration must be at least 10 * tau (duration {}, tau {})",
                self.duration, self.tau
            )));
        }
        if self.local_clocks.is_empty() {
            return Err(Error::invalid("at least one local clock is required"));
        }
        if !(self.quantization.is_finite() && self.quantization >= 0.0) {
            return Err(Error::invalid("quantization must be non-negative"));
        }
        for spec in &self.local_clocks {
            spec.validate()?;
        }
        self.gnss.validate()?;
        self.attack.validate()?;
        if let Some(r) = self.filter.r_diag {
            if !(r.is_finite() && r >= 0.0) {
                return Err(Error::invalid("filter.r_diag must be non-negative"));
            }
        }
        Ok(())
    }

    /// Number of sampled epochs, including t = 0 and t = duration.
    pub fn n_epochs(&self) -> usize {
        (self.duration / self.tau + 1e-9).floor() as usize + 1
    }

    pub fn n_clocks(&self) -> usize {
        self.local_clocks.len() + 1
    }

    /// Measurement-noise variance used by the filter.
    pub fn r_diag(&self) -> f64 {
        self.filter
            .r_diag
            .unwrap_or((self.quantization.powi(2) / 12.0).max(MIN_R_DIAG))
    }

    /// Filter model matching this scenario's clocks and measurement chain.
    pub fn filter_model(&self) -> FilterModel {
        let mut specs = Vec::with_capacity(self.n_clocks());
        specs.push(self.gnss.filter_spec(self.tau));
        specs.extend(self.local_clocks.iter().copied());
        FilterModel::new(specs, self.tau, self.r_diag()).with_initial_variance(
            self.filter
                .initial_variance
                .unwrap_or(DEFAULT_INITIAL_VARIANCE),
        )
    }

    /// Copy with the attack removed.
    pub fn benign(&self) -> Self {
        Self {
            attack: AttackProfile::None,
            ..self.clone()
        }
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("scenario config serializes")
    }

    pub fn from_toml(text: &str) -> std::result::Result<Self, String> {
        let cfg: Self = toml::from_str(text).map_err(|e| e.to_string())?;
        Ok(cfg)
    }

    /// Reads and validates a config file.
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::Config {
            path: path.to_path_buf(),
            message: format!("cannot read config: {e}"),
        })?;
        let cfg = Self::from_toml(&text).map_err(|message| Error::Config {
            path: path.to_path_buf(),
            message,
        })?;
        cfg.validate().map_err(|e| Error::Config {
            path: path.to_path_buf(),
            message: e.to_string(),
        })?;
        Ok(cfg)
    }
}
