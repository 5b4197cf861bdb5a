use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use super::attack::attack_offset;
use super::config::ScenarioConfig;
use crate::clock::{propagate_state, ClockState, ProcessNoise};
use crate::error::{Error, Result};
use crate::filter::MeasurementVector;

/// Per-epoch truth for one run.
#[derive(Debug, Clone, PartialEq)]
pub struct TraceSet {
    /// Seconds.
    pub epochs: Vec<f64>,
    /// GNSS-disciplined clock against ideal time, attack included, seconds.
    pub gnss_phase: Vec<f64>,
    /// `local_phases[i][k]` is local clock `i + 1` at epoch `k`, seconds.
    pub local_phases: Vec<Vec<f64>>,
    /// Injected offset, seconds.
    pub attack_truth: Vec<f64>,
}

impl TraceSet {
    pub fn len(&self) -> usize {
        self.epochs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.epochs.is_empty()
    }

    pub fn n_local(&self) -> usize {
        self.local_phases.len()
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.epochs.len();
        if self.gnss_phase.len() != n
            || self.attack_truth.len() != n
            || self.local_phases.iter().any(|c| c.len() != n)
        {
            return Err(Error::invalid("trace columns have unequal lengths"));
        }
        if self.local_phases.is_empty() {
            return Err(Error::invalid("trace has no local clocks"));
        }
        Ok(())
    }
}

const GNSS_WHITE_STREAM: u64 = 0;
const GNSS_WANDER_STREAM: u64 = 1;
const LOCAL_STREAM_BASE: u64 = 16;

fn stream(seed: u64, id: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(id);
    rng
}

/// Simulates the configured ensemble.
///
/// Every noise source draws from its own seeded stream, so the benign part of
/// a trace does not depend on the attack profile.
pub fn simulate(config: &ScenarioConfig) -> Result<TraceSet> {
    config.validate()?;
    let n = config.n_epochs();
    let tau = config.tau;
    let epochs: Vec<f64> = (0..n).map(|k| k as f64 * tau).collect();

    let mut local_phases = Vec::with_capacity(config.local_clocks.len());
    for (i, spec) in config.local_clocks.iter().enumerate() {
        let noise = ProcessNoise::new(spec, tau)?;
        let mut rng = stream(config.seed, LOCAL_STREAM_BASE + i as u64);
        let mut state = ClockState::default();
        let mut phase = Vec::with_capacity(n);
        phase.push(state.theta);
        for _ in 1..n {
            state = propagate_state(state, tau, noise.sample(&mut rng))?;
            phase.push(state.theta);
        }
        local_phases.push(phase);
    }

    let gnss = &config.gnss;
    let mut white_rng = stream(config.seed, GNSS_WHITE_STREAM);
    let mut wander_rng = stream(config.seed, GNSS_WANDER_STREAM);
    let decay = (-gnss.steering_gain * tau).exp();
    let kick = gnss.wander_sigma * (1.0 - decay * decay).sqrt();
    let mut wander = gnss.wander_sigma * wander_rng.sample::<f64, _>(StandardNormal);

    let mut gnss_phase = Vec::with_capacity(n);
    let mut attack_truth = Vec::with_capacity(n);
    for (k, &t) in epochs.iter().enumerate() {
        if k > 0 {
            wander = wander * decay + kick * wander_rng.sample::<f64, _>(StandardNormal);
        }
        let white = gnss.benign_phase_sigma * white_rng.sample::<f64, _>(StandardNormal);
        let a = attack_offset(&config.attack, t);
        gnss_phase.push(white + wander + a);
        attack_truth.push(a);
    }

    Ok(TraceSet {
        epochs,
        gnss_phase,
        local_phases,
        attack_truth,
    })
}

/// Rounds `x` to the nearest multiple of `step`; a zero step is exact.
pub fn round_to_grid(x: f64, step: f64) -> f64 {
    if step == 0.0 {
        x
    } else {
        (x / step).round() * step
    }
}

/// Quantized phase differences `θ_GNSS − θ_i` per epoch.
pub fn measure(traces: &TraceSet, quantization: f64) -> Vec<MeasurementVector> {
    (0..traces.len())
        .map(|k| {
            MeasurementVector::new(
                traces
                    .local_phases
                    .iter()
                    .map(|c| round_to_grid(traces.gnss_phase[k] - c[k], quantization))
                    .collect(),
            )
        })
        .collect()
}
