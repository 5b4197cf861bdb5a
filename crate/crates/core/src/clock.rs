//! Three-state clock model: phase, frequency and frequency drift.
//!
//! Propagation uses the exact discrete-time form of the continuous model, so
//! simulated clocks carry no step-size bias.

use nalgebra::{Matrix3, Vector3};
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::psd_cholesky3;

/// State of one clock at an epoch.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct ClockState {
    /// Phase offset against ideal time, seconds.
    pub theta: f64,
    /// Fractional frequency offset, s/s.
    pub gamma: f64,
    /// Frequency drift rate, 1/s.
    pub drift: f64,
}

impl ClockState {
    pub fn new(theta: f64, gamma: f64, drift: f64) -> Self {
        Self {
            theta,
            gamma,
            drift,
        }
    }

    pub fn to_vector(self) -> Vector3<f64> {
        Vector3::new(self.theta, self.gamma, self.drift)
    }

    pub fn from_vector(v: &Vector3<f64>) -> Self {
        Self::new(v[0], v[1], v[2])
    }

    pub fn is_finite(&self) -> bool {
        self.theta.is_finite() && self.gamma.is_finite() && self.drift.is_finite()
    }
}

/// Spectral densities of the white noises driving phase, frequency and drift.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NoiseSpec {
    /// s²/s
    pub q_theta: f64,
    /// (s/s)²/s
    pub q_gamma: f64,
    /// (1/s)²/s
    #[serde(default)]
    pub q_drift: f64,
}

impl NoiseSpec {
    pub const IDEAL: NoiseSpec = NoiseSpec {
        q_theta: 0.0,
        q_gamma: 0.0,
        q_drift: 0.0,
    };

    pub fn new(q_theta: f64, q_gamma: f64, q_drift: f64) -> Self {
        Self {
            q_theta,
            q_gamma,
            q_drift,
        }
    }

    /// Densities of an OCXO matching a 5e-10 Allan deviation at 1 s.
    ///
    /// White frequency noise sets the short-term level; a weak random walk of
    /// frequency keeps the deviation below 1e-9 out to 1e4 s.
    pub fn ocxo() -> Self {
        Self::new(2.5e-19, 1e-26, 0.0)
    }

    pub fn validate(&self) -> Result<()> {
        for (name, q) in [
            ("q_theta", self.q_theta),
            ("q_gamma", self.q_gamma),
            ("q_drift", self.q_drift),
        ] {
            if !q.is_finite() || q < 0.0 {
                return Err(Error::invalid(format!(
                    "{name} must be finite and non-negative, got {q}"
                )));
            }
        }
        Ok(())
    }

    pub fn is_ideal(&self) -> bool {
        self.q_theta == 0.0 && self.q_gamma == 0.0 && self.q_drift == 0.0
    }

    pub fn scaled(&self, c: f64) -> Self {
        Self::new(self.q_theta * c, self.q_gamma * c, self.q_drift * c)
    }
}

fn check_tau(tau: f64) -> Result<()> {
    if tau.is_finite() && tau > 0.0 {
        Ok(())
    } else {
        Err(Error::invalid(format!(
            "tau must be positive and finite, got {tau}"
        )))
    }
}

/// State transition over `tau` seconds.
pub fn transition_block(tau: f64) -> Result<Matrix3<f64>> {
    check_tau(tau)?;
    Ok(Matrix3::new(
        1.0,
        tau,
        0.5 * tau * tau,
        0.0,
        1.0,
        tau,
        0.0,
        0.0,
        1.0,
    ))
}

/// Integrated process-noise covariance over `tau` seconds.
pub fn process_noise_block(spec: &NoiseSpec, tau: f64) -> Result<Matrix3<f64>> {
    spec.validate()?;
    check_tau(tau)?;
    let NoiseSpec {
        q_theta: q1,
        q_gamma: q2,
        q_drift: q3,
    } = *spec;
    let t2 = tau * tau;
    let t3 = t2 * tau;
    let t4 = t3 * tau;
    let t5 = t4 * tau;
    let q11 = q1 * tau + q2 * t3 / 3.0 + q3 * t5 / 20.0;
    let q12 = q2 * t2 / 2.0 + q3 * t4 / 8.0;
    let q13 = q3 * t3 / 6.0;
    let q22 = q2 * tau + q3 * t3 / 3.0;
    let q23 = q3 * t2 / 2.0;
    let q33 = q3 * tau;
    Ok(Matrix3::new(q11, q12, q13, q12, q22, q23, q13, q23, q33))
}

/// Correlated process-noise generator for a fixed spec and step.
///
/// Factors the covariance once so repeated draws cost one matrix-vector product.
#[derive(Debug, Clone)]
pub struct ProcessNoise {
    factor: Matrix3<f64>,
}

impl ProcessNoise {
    pub fn new(spec: &NoiseSpec, tau: f64) -> Result<Self> {
        let q = process_noise_block(spec, tau)?;
        Ok(Self {
            factor: psd_cholesky3(&q)?,
        })
    }

    pub fn factor(&self) -> &Matrix3<f64> {
        &self.factor
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Vector3<f64> {
        let e = Vector3::new(
            rng.sample(StandardNormal),
            rng.sample(StandardNormal),
            rng.sample(StandardNormal),
        );
        self.factor * e
    }
}

/// Draws one zero-mean noise vector with covariance `process_noise_block(spec, tau)`.
pub fn sample_process_noise<R: Rng + ?Sized>(
    spec: &NoiseSpec,
    tau: f64,
    rng: &mut R,
) -> Result<Vector3<f64>> {
    Ok(ProcessNoise::new(spec, tau)?.sample(rng))
}

/// Advances `state` by `tau` seconds and adds `noise`.
pub fn propagate_state(state: ClockState, tau: f64, noise: Vector3<f64>) -> Result<ClockState> {
    if !state.is_finite() || noise.iter().any(|v| !v.is_finite()) {
        return Err(Error::invalid("state and noise must be finite"));
    }
    let phi = transition_block(tau)?;
    Ok(ClockState::from_vector(&(phi * state.to_vector() + noise)))
}

/// Noise-free phase `theta0 + gamma t + drift t² / 2`.
pub fn deterministic_phase(theta0: f64, gamma: f64, drift: f64, t: f64) -> Result<f64> {
    if [theta0, gamma, drift, t].iter().any(|v| !v.is_finite()) {
        return Err(Error::invalid("deterministic_phase inputs must be finite"));
    }
    Ok(theta0 + gamma * t + 0.5 * drift * t * t)
}
