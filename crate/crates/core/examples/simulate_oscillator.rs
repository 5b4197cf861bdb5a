//! Propagates an OCXO-class clock with exact-discretization noise and compares
//! its Allan deviation with the part spec.

use clockwatch::clock::{
    process_noise_block, propagate_state, ClockState, NoiseSpec, ProcessNoise,
};
use clockwatch::stability::{allan_curve, phase_to_frequency};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn main() -> clockwatch::Result<()> {
    let spec = NoiseSpec::ocxo();
    let tau = 1.0;
    println!(
        "Q block for tau = {tau} s:\n{}",
        process_noise_block(&spec, tau)?
    );

    let noise = ProcessNoise::new(&spec, tau)?;
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut state = ClockState::default();
    let mut phase = vec![state.theta];
    for _ in 0..200_000 {
        state = propagate_state(state, tau, noise.sample(&mut rng))?;
        phase.push(state.theta);
    }
    println!("phase after {} s: {:.3e} s", phase.len() - 1, state.theta);

    let y = phase_to_frequency(&phase, tau)?;
    println!("{:>10}  {:>10}", "tau [s]", "ADEV");
    for p in allan_curve(&y)? {
        println!("{:>10}  {:>10.3e}", p.tau, p.variance.sqrt());
    }
    Ok(())
}
