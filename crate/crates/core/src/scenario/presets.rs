//! Built-in scenarios modeled on the TEXBAT static and mobile recordings.

use super::attack::AttackProfile;
use super::config::{FilterTuning, GnssClockModel, ScenarioConfig};
use crate::clock::NoiseSpec;

/// Reference calibration for the static receiver: σθ (s), σγ (s/s).
pub const STATIC_SIGMAS: (f64, f64) = (5.5834e-08, 1.4109e-09);
/// Reference calibration for the mobile receiver: σθ (s), σγ (s/s).
pub const MOBILE_SIGMAS: (f64, f64) = (3.5606e-08, 2.2561e-09);

/// Names accepted by [`preset`].
pub const PRESET_NAMES: [&str; 5] = [
    "texbat2-like",
    "texbat3-like",
    "texbat5-like",
    "static-benign",
    "mobile-benign",
];

/// Duration of the long benign runs used for calibration, seconds.
pub const CALIBRATION_DURATION: f64 = 1e4;

/// GNSS output of a static receiver.
pub fn static_gnss() -> GnssClockModel {
    GnssClockModel {
        benign_phase_sigma: 2e-9,
        steering_gain: 1.0 / 300.0,
        wander_sigma: 5.4e-8,
        tracking_q_gamma: 1e-18,
    }
}

/// GNSS output of a mobile receiver: faster steering, larger frequency activity.
pub fn mobile_gnss() -> GnssClockModel {
    GnssClockModel {
        benign_phase_sigma: 3e-9,
        steering_gain: 1.0 / 60.0,
        wander_sigma: 3.3e-8,
        tracking_q_gamma: 3e-18,
    }
}

fn base(gnss: GnssClockModel, duration: f64, attack: AttackProfile) -> ScenarioConfig {
    ScenarioConfig {
        duration,
        tau: 1.0,
        quantization: 5e-9,
        seed: 0,
        gnss,
        attack,
        filter: FilterTuning::default(),
        local_clocks: vec![NoiseSpec::ocxo(); 3],
    }
}

/// Scenario config for a preset name, if known.
pub fn preset(name: &str) -> Option<ScenarioConfig> {
    let cfg = match name {
        "texbat2-like" => base(
            static_gnss(),
            500.0,
            AttackProfile::Ramp {
                start: 60.0,
                target_offset: 2e-6,
                pull_rate: 20e-9,
            },
        ),
        "texbat5-like" => base(
            mobile_gnss(),
            500.0,
            AttackProfile::Ramp {
                start: 60.0,
                target_offset: 1.8e-6,
                pull_rate: 20e-9,
            },
        ),
        "texbat3-like" => base(
            static_gnss(),
            500.0,
            AttackProfile::FreqImpulse {
                start: 150.0,
                impulse_amplitude: 4e-8,
                impulse_duration: 2.0,
            },
        ),
        "static-benign" => base(static_gnss(), CALIBRATION_DURATION, AttackProfile::None),
        "mobile-benign" => base(mobile_gnss(), CALIBRATION_DURATION, AttackProfile::None),
        _ => return None,
    };
    Some(cfg)
}
