//! Steps the ensemble Kalman filter by hand over a simulated benign trace.

use clockwatch::filter::{gnss_differential_estimate, EnsembleFilter};
use clockwatch::scenario::{measure, preset, simulate};

fn main() -> clockwatch::Result<()> {
    let mut cfg = preset("static-benign").expect("built-in preset");
    cfg.duration = 600.0;
    let traces = simulate(&cfg)?;
    let z = measure(&traces, cfg.quantization);

    let filter = EnsembleFilter::new(cfg.filter_model())?;
    let mut state = filter.initial_state();
    let mut nis_sum = 0.0;
    println!(
        "{:>6}  {:>11}  {:>11}  {:>9}  {:>6}",
        "t [s]", "theta_hat", "gamma_hat", "sigma_th", "NIS"
    );
    for (k, zk) in z.iter().enumerate() {
        if k > 0 {
            state = filter.predict(&state)?;
        }
        let (next, innov) = filter.update(&state, zk)?;
        state = next;
        nis_sum += innov.nis;
        if k % 60 == 0 {
            let d = gnss_differential_estimate(&state);
            println!(
                "{:>6}  {:>11.3e}  {:>11.3e}  {:>9.2e}  {:>6.2}",
                traces.epochs[k],
                d.theta_hat,
                d.gamma_hat,
                d.theta_var.sqrt(),
                innov.nis
            );
        }
    }
    println!(
        "mean NIS {:.2} for {} measured differences",
        nis_sum / z.len() as f64,
        cfg.local_clocks.len()
    );
    Ok(())
}
