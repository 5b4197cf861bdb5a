//! Short frequency impulse: the frequency test fires while the phase stays in tolerance.

use clockwatch::detector::{DetectorConfig, DEFAULT_MULTIPLIER, DEFAULT_WARMUP};
use clockwatch::pipeline::{calibrate_scenario, run_scenario};
use clockwatch::scenario::preset;

fn main() -> clockwatch::Result<()> {
    let cfg = preset("texbat3-like").expect("built-in preset");
    let cal = calibrate_scenario(&cfg, DEFAULT_MULTIPLIER, DEFAULT_WARMUP)?;
    let run = run_scenario(&cfg, &cal, &DetectorConfig::default())?;

    println!(
        "thresholds: phase {:.3e} s, frequency {:.3e}",
        cal.phase_threshold(),
        cal.frequency_threshold()
    );
    for (k, v) in run.verdicts.iter().enumerate() {
        let t = v.epoch;
        if (145.0..=165.0).contains(&t) {
            let e = &run.estimates.estimates[k];
            println!(
                "t = {t:>4} s  theta_hat {:>10.3e}  gamma_hat {:>10.3e}  {}",
                e.theta_hat, e.gamma_hat, v.classification
            );
        }
    }
    let phase_alarms = run.verdicts.iter().filter(|v| v.phase_alarm).count();
    println!("phase alarms over the whole run: {phase_alarms}");
    Ok(())
}
