//! Oracles shared by the filter suite and the acceptance harness.
#![allow(dead_code)]

use clockwatch::clock::{propagate_state, ClockState, NoiseSpec, ProcessNoise};
use clockwatch::filter::{EnsembleFilter, FilterState, InnovationRecord, MeasurementVector};
use clockwatch::linalg::check_covariance;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

/// Clocks simulated from the filter's own model, with Gaussian measurement noise.
pub struct ConsistentRun {
    pub measurements: Vec<MeasurementVector>,
}

pub fn consistent_run(specs: &[NoiseSpec], r: f64, steps: usize, seed: u64) -> ConsistentRun {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let gens: Vec<ProcessNoise> = specs
        .iter()
        .map(|s| ProcessNoise::new(s, 1.0).unwrap())
        .collect();
    let mut states = vec![ClockState::default(); specs.len()];
    let meas_noise = Normal::new(0.0, r.sqrt()).unwrap();
    let mut measurements = Vec::with_capacity(steps);
    for k in 0..steps {
        if k > 0 {
            for (s, g) in states.iter_mut().zip(&gens) {
                *s = propagate_state(*s, 1.0, g.sample(&mut rng)).unwrap();
            }
        }
        let z = (1..specs.len())
            .map(|i| states[0].theta - states[i].theta + meas_noise.sample(&mut rng))
            .collect();
        measurements.push(MeasurementVector::new(z));
    }
    ConsistentRun { measurements }
}

pub fn run_filter(
    filter: &EnsembleFilter,
    measurements: &[MeasurementVector],
    mut each: impl FnMut(usize, &FilterState, &InnovationRecord),
) -> FilterState {
    let mut state = filter.initial_state();
    for (k, z) in measurements.iter().enumerate() {
        if k > 0 {
            state = filter.predict(&state).unwrap();
            check_covariance(&state.p).unwrap();
        }
        let (s, rec) = filter.update(&state, z).unwrap();
        check_covariance(&s.p).unwrap();
        each(k, &s, &rec);
        state = s;
    }
    state
}

/// Two-state filter on the clock difference d = θ_GNSS − θ_1.
pub struct ScalarDifferenceFilter {
    pub x: [f64; 2],
    pub p: [[f64; 2]; 2],
    q: [[f64; 2]; 2],
    r: f64,
}

impl ScalarDifferenceFilter {
    pub fn new(a: &NoiseSpec, b: &NoiseSpec, p0: [f64; 2], r: f64) -> Self {
        let q11 = a.q_theta + b.q_theta + (a.q_gamma + b.q_gamma) / 3.0;
        let q12 = (a.q_gamma + b.q_gamma) / 2.0;
        let q22 = a.q_gamma + b.q_gamma;
        Self {
            x: [0.0, 0.0],
            p: [[2.0 * p0[0], 0.0], [0.0, 2.0 * p0[1]]],
            q: [[q11, q12], [q12, q22]],
            r,
        }
    }

    pub fn predict(&mut self) {
        let [[a, b], [_, d]] = self.p;
        self.x = [self.x[0] + self.x[1], self.x[1]];
        let p11 = a + 2.0 * b + d + self.q[0][0];
        let p12 = b + d + self.q[0][1];
        let p22 = d + self.q[1][1];
        self.p = [[p11, p12], [p12, p22]];
    }

    pub fn update(&mut self, z: f64) {
        let c = self.p[0][0] + self.r;
        let k = [self.p[0][0] / c, self.p[1][0] / c];
        let innov = z - self.x[0];
        self.x = [self.x[0] + k[0] * innov, self.x[1] + k[1] * innov];
        let [[a, b], [_, d]] = self.p;
        self.p = [[a - k[0] * a, b - k[0] * b], [b - k[0] * b, d - k[1] * b]];
    }
}

/// Wilson-Hilferty approximation of a chi-square quantile.
pub fn chi2_quantile(dof: f64, z: f64) -> f64 {
    let a = 2.0 / (9.0 * dof);
    dof * (1.0 - a + z * a.sqrt()).powi(3)
}
