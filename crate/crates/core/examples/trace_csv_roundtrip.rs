//! Writes a trace and a measurement log, reads both back, and tracks the log.

use clockwatch::pipeline::{track, track_trace};
use clockwatch::scenario::{
    load_measurement_csv, load_trace_csv, measure, preset, save_measurement_csv, save_trace_csv,
    simulate,
};

fn main() -> clockwatch::Result<()> {
    let cfg = preset("texbat2-like").expect("built-in preset");
    let traces = simulate(&cfg)?;
    let dir = std::env::temp_dir().join("clockwatch-roundtrip");
    std::fs::create_dir_all(&dir).map_err(|source| clockwatch::Error::Io {
        path: dir.clone(),
        source,
    })?;

    let trace_path = dir.join("trace.csv");
    save_trace_csv(&traces, &trace_path)?;
    let back = load_trace_csv(&trace_path)?;
    println!(
        "{}: {} epochs, bit-exact: {}",
        trace_path.display(),
        back.len(),
        back == traces
    );

    let log_path = dir.join("measurements.csv");
    save_measurement_csv(
        &traces.epochs,
        &measure(&traces, cfg.quantization),
        &log_path,
    )?;
    let log = load_measurement_csv(&log_path)?;
    println!(
        "{}: {} epochs x {} clocks",
        log_path.display(),
        log.epochs.len(),
        log.n_local
    );

    let from_log = track(cfg.filter_model(), &log.epochs, &log.measurements)?;
    let from_trace = track_trace(&cfg, &traces)?;
    let last = from_log.estimates.len() - 1;
    println!(
        "final theta_hat: {:.6e} s from the log, {:.6e} s from the trace",
        from_log.estimates[last].theta_hat, from_trace.estimates[last].theta_hat
    );
    Ok(())
}
