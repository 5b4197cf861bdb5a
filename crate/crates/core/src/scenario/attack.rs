use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Time offset injected into the GNSS-disciplined clock.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum AttackProfile {
    #[default]
    None,
    /// Jump to `target_offset` at `start`.
    Step { start: f64, target_offset: f64 },
    /// Slew toward `target_offset` at `pull_rate` s/s from `start`.
    Ramp {
        start: f64,
        target_offset: f64,
        pull_rate: f64,
    },
    /// Rectangular frequency pulse of `impulse_amplitude` s/s lasting `impulse_duration` s.
    FreqImpulse {
        start: f64,
        impulse_amplitude: f64,
        impulse_duration: f64,
    },
}

impl AttackProfile {
    pub fn start(&self) -> Option<f64> {
        match *self {
            AttackProfile::None => None,
            AttackProfile::Step { start, .. }
            | AttackProfile::Ramp { start, .. }
            | AttackProfile::FreqImpulse { start, .. } => Some(start),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            AttackProfile::None => "none",
            AttackProfile::Step { .. } => "step",
            AttackProfile::Ramp { .. } => "ramp",
            AttackProfile::FreqImpulse { .. } => "freq_impulse",
        }
    }

    pub fn validate(&self) -> Result<()> {
        let finite = |name: &str, v: f64| {
            if v.is_finite() {
                Ok(())
            } else {
                Err(Error::invalid(format!("attack {name} must be finite")))
            }
        };
        if let Some(start) = self.start() {
            finite("start", start)?;
            if start < 0.0 {
                return Err(Error::invalid("attack start must be non-negative"));
            }
        }
        match *self {
            AttackProfile::None => {}
            AttackProfile::Step { target_offset, .. } => {
                finite("target_offset", target_offset)?;
                if target_offset == 0.0 {
                    return Err(Error::invalid("step attack needs a non-zero target_offset"));
                }
            }
            AttackProfile::Ramp {
                target_offset,
                pull_rate,
                ..
            } => {
                finite("target_offset", target_offset)?;
                finite("pull_rate", pull_rate)?;
                if target_offset == 0.0 {
                    return Err(Error::invalid("ramp attack needs a non-zero target_offset"));
                }
                if pull_rate <= 0.0 {
                    return Err(Error::invalid("ramp attack needs a positive pull_rate"));
                }
            }
            AttackProfile::FreqImpulse {
                impulse_amplitude,
                impulse_duration,
                ..
            } => {
                finite("impulse_amplitude", impulse_amplitude)?;
                finite("impulse_duration", impulse_duration)?;
                if impulse_duration <= 0.0 {
                    return Err(Error::invalid(
                        "freq_impulse needs a positive impulse_duration",
                    ));
                }
            }
        }
        Ok(())
    }
}

/// Injected offset at time `t`, seconds.
pub fn attack_offset(profile: &AttackProfile, t: f64) -> f64 {
    match *profile {
        AttackProfile::None => 0.0,
        AttackProfile::Step {
            start,
            target_offset,
        } => {
            if t >= start {
                target_offset
            } else {
                0.0
            }
        }
        AttackProfile::Ramp {
            start,
            target_offset,
            pull_rate,
        } => {
            if t <= start {
                0.0
            } else {
                target_offset.signum() * (pull_rate * (t - start)).min(target_offset.abs())
            }
        }
        AttackProfile::FreqImpulse {
            start,
            impulse_amplitude,
            impulse_duration,
        } => impulse_amplitude * (t - start).clamp(0.0, impulse_duration),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const RAMP: AttackProfile = AttackProfile::Ramp {
        start: 60.0,
        target_offset: 2e-6,
        pull_rate: 20e-9,
    };

    #[test]
    fn ramp_examples() {
        assert_eq!(attack_offset(&RAMP, 50.0), 0.0);
        assert!((attack_offset(&RAMP, 160.0) - 2e-6).abs() < 1e-18);
        assert!((attack_offset(&RAMP, 110.0) - 1e-6).abs() < 1e-18);
        assert_eq!(attack_offset(&RAMP, 400.0), 2e-6);
    }

    #[test]
    fn negative_ramp_mirrors() {
        let neg = AttackProfile::Ramp {
            start: 60.0,
            target_offset: -2e-6,
            pull_rate: 20e-9,
        };
        assert_eq!(attack_offset(&neg, 300.0), -2e-6);
    }

    #[test]
    fn step_and_impulse() {
        let step = AttackProfile::Step {
            start: 60.0,
            target_offset: 2e-6,
        };
        assert_eq!(attack_offset(&step, 59.0), 0.0);
        assert_eq!(attack_offset(&step, 60.0), 2e-6);
        let imp = AttackProfile::FreqImpulse {
            start: 150.0,
            impulse_amplitude: 4e-8,
            impulse_duration: 2.0,
        };
        assert_eq!(attack_offset(&imp, 150.0), 0.0);
        assert!((attack_offset(&imp, 151.0) - 4e-8).abs() < 1e-20);
        assert_eq!(attack_offset(&imp, 152.0), attack_offset(&imp, 900.0));
    }

    #[test]
    fn validation() {
        assert!(RAMP.validate().is_ok());
        let bad = AttackProfile::Ramp {
            start: 60.0,
            target_offset: 2e-6,
            pull_rate: 0.0,
        };
        assert!(bad.validate().is_err());
        let bad = AttackProfile::Step {
            start: -1.0,
            target_offset: 1e-6,
        };
        assert!(bad.validate().is_err());
    }
}
