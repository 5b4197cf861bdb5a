//! Monte-Carlo over seeds for each attack preset, summarised by median and IQR.

use clockwatch::detector::{DetectorConfig, DEFAULT_MULTIPLIER, DEFAULT_WARMUP};
use clockwatch::pipeline::{calibrate_scenario, run_scenario, summarize};
use clockwatch::scenario::preset;
use rayon::prelude::*;

fn main() -> clockwatch::Result<()> {
    for name in ["texbat2-like", "texbat5-like", "texbat3-like"] {
        let base = preset(name).expect("built-in preset");
        let cal = calibrate_scenario(&base, DEFAULT_MULTIPLIER, DEFAULT_WARMUP)?;
        let metrics = (0..20u64)
            .into_par_iter()
            .map(|seed| {
                let mut cfg = base.clone();
                cfg.seed = seed;
                run_scenario(&cfg, &cal, &DetectorConfig::default()).map(|r| r.metrics)
            })
            .collect::<clockwatch::Result<Vec<_>>>()?;

        let latency: Vec<f64> = metrics.iter().filter_map(|m| m.detection_latency).collect();
        let offset: Vec<f64> = metrics
            .iter()
            .filter_map(|m| m.offset_at_detection)
            .collect();
        let fp: usize = metrics.iter().map(|m| m.false_positive_count).sum();
        print!("{name}: {}/{} detected", latency.len(), metrics.len());
        if let Some(s) = summarize(&latency) {
            print!(", latency median {:.1} s (IQR {:.1})", s.median, s.iqr());
        }
        if let Some(s) = summarize(&offset) {
            print!(", offset median {:.2e} s", s.median);
        }
        println!(", false positives {fp}");
    }
    Ok(())
}
