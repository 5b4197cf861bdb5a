//! Ramp attack on a static receiver: prints every change of verdict.

use clockwatch::detector::{DetectorConfig, DEFAULT_MULTIPLIER, DEFAULT_WARMUP};
use clockwatch::pipeline::{calibrate_scenario, run_scenario};
use clockwatch::scenario::preset;

fn main() -> clockwatch::Result<()> {
    let cfg = preset("texbat2-like").expect("built-in preset");
    let cal = calibrate_scenario(&cfg, DEFAULT_MULTIPLIER, DEFAULT_WARMUP)?;
    let run = run_scenario(&cfg, &cal, &DetectorConfig::default())?;

    let mut last = None;
    for (k, v) in run.verdicts.iter().enumerate() {
        if last != Some(v.classification) {
            let e = &run.estimates.estimates[k];
            println!(
                "t = {:>5} s  {:<17} theta_hat {:>10.3e}  gamma_hat {:>10.3e}  injected {:.3e}",
                v.epoch,
                v.classification.as_str(),
                e.theta_hat,
                e.gamma_hat,
                run.traces.attack_truth[k]
            );
            last = Some(v.classification);
        }
    }
    let m = run.metrics;
    if let (Some(latency), Some(offset)) = (m.detection_latency, m.offset_at_detection) {
        println!("latency {latency} s, offset at detection {offset:.3e} s");
    }
    println!("false positives {}", m.false_positive_count);
    Ok(())
}
