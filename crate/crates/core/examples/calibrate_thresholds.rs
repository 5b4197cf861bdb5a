//! Calibrates 6-sigma thresholds from long benign runs and writes a calibration file.

use clockwatch::cli::{load_calibration, save_calibration};
use clockwatch::detector::{DEFAULT_MULTIPLIER, DEFAULT_WARMUP};
use clockwatch::pipeline::calibrate_scenario;
use clockwatch::scenario::preset;
use clockwatch::scenario::presets::{MOBILE_SIGMAS, STATIC_SIGMAS};

fn main() -> clockwatch::Result<()> {
    for (name, reference) in [
        ("static-benign", STATIC_SIGMAS),
        ("mobile-benign", MOBILE_SIGMAS),
    ] {
        let cfg = preset(name).expect("built-in preset");
        let cal = calibrate_scenario(&cfg, DEFAULT_MULTIPLIER, DEFAULT_WARMUP)?;
        println!(
            "{name}: sigma_theta {:.3e} s (reference {:.3e}), sigma_gamma {:.3e} (reference {:.3e})",
            cal.sigma_theta, reference.0, cal.sigma_gamma, reference.1
        );
        println!(
            "  thresholds: phase {:.3e} s, frequency {:.3e}",
            cal.phase_threshold(),
            cal.frequency_threshold()
        );

        let path = std::env::temp_dir().join(format!("{name}-calibration.toml"));
        save_calibration(&cal, &path)?;
        assert_eq!(load_calibration(&path)?.multiplier, cal.multiplier);
        println!("  written to {}", path.display());
    }
    Ok(())
}
