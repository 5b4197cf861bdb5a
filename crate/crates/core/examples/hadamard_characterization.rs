//! Recovers the noise densities of a simulated clock from its Hadamard curve.

use clockwatch::clock::{propagate_state, ClockState, NoiseSpec, ProcessNoise};
use clockwatch::stability::{
    fit_noise_coefficients, hadamard_curve, hadamard_model, phase_to_frequency,
};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn main() -> clockwatch::Result<()> {
    let truth = NoiseSpec::new(1e-20, 6.7e-23, 1.2e-28);
    let noise = ProcessNoise::new(&truth, 1.0)?;
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut state = ClockState::default();
    let mut phase = vec![0.0];
    for _ in 0..100_000 {
        state = propagate_state(state, 1.0, noise.sample(&mut rng))?;
        phase.push(state.theta);
    }

    let curve = hadamard_curve(&phase_to_frequency(&phase, 1.0)?)?;
    let fit = fit_noise_coefficients(&curve)?;
    println!(
        "{:>8}  {:>11}  {:>11}  {:>6}",
        "tau", "measured", "fitted", "terms"
    );
    for p in &curve {
        println!(
            "{:>8}  {:>11.3e}  {:>11.3e}  {:>6}",
            p.tau,
            p.variance,
            hadamard_model(&fit.spec, p.tau),
            p.num_terms
        );
    }
    println!(
        "true    q_theta {:.3e}  q_gamma {:.3e}  q_drift {:.3e}",
        truth.q_theta, truth.q_gamma, truth.q_drift
    );
    println!(
        "fitted  q_theta {:.3e}  q_gamma {:.3e}  q_drift {:.3e}  (residual {:.3})",
        fit.spec.q_theta, fit.spec.q_gamma, fit.spec.q_drift, fit.residual
    );
    Ok(())
}
