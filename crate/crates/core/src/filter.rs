//! N-clock Kalman ensemble filter over phase-difference measurements.
//!
//! Slot 0 is the GNSS-disciplined clock and slots 1..N are local clocks. Each
//! clock carries three states (phase, frequency, drift), stacked into a 3N
//! vector. Only clock differences are observable, so after every update the
//! estimate and covariance are projected onto the frame where the local clocks
//! average to zero. The GNSS slot then holds the GNSS-minus-ensemble
//! differential used by the detector.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::clock::{process_noise_block, transition_block, NoiseSpec};
use crate::error::{Error, Result};
use crate::linalg::{condition_estimate, symmetrize};

/// Default initial variances for the phase, frequency and drift slots of every clock.
pub const DEFAULT_INITIAL_VARIANCE: [f64; 3] = [1e-12, 1e-16, 1e-24];

/// Static description of the filter.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FilterModel {
    /// Index 0 is the GNSS clock, 1..N are local clocks.
    pub clock_specs: Vec<NoiseSpec>,
    /// Nominal step, seconds.
    pub tau: f64,
    /// Measurement-noise variance on every row, s².
    pub r_diag: f64,
    /// Initial covariance diagonal per clock: phase s², frequency (s/s)², drift (1/s)².
    pub initial_variance: [f64; 3],
}

impl FilterModel {
    pub fn new(clock_specs: Vec<NoiseSpec>, tau: f64, r_diag: f64) -> Self {
        Self {
            clock_specs,
            tau,
            r_diag,
            initial_variance: DEFAULT_INITIAL_VARIANCE,
        }
    }

    pub fn with_initial_variance(mut self, initial_variance: [f64; 3]) -> Self {
        self.initial_variance = initial_variance;
        self
    }

    pub fn n_clocks(&self) -> usize {
        self.clock_specs.len()
    }

    pub fn validate(&self) -> Result<()> {
        if self.clock_specs.len() < 2 {
            return Err(Error::invalid(format!(
                "ensemble needs at least 2 clocks, got {}",
                self.clock_specs.len()
            )));
        }
        for spec in &self.clock_specs {
            spec.validate()?;
        }
        if !(self.tau.is_finite() && self.tau > 0.0) {
            return Err(Error::invalid(format!(
                "tau must be positive, got {}",
                self.tau
            )));
        }
        if !(self.r_diag.is_finite() && self.r_diag >= 0.0) {
            return Err(Error::invalid(format!(
                "r_diag must be non-negative, got {}",
                self.r_diag
            )));
        }
        if self
            .initial_variance
            .iter()
            .any(|v| !(v.is_finite() && *v >= 0.0))
        {
            return Err(Error::invalid("initial variances must be non-negative"));
        }
        Ok(())
    }
}

/// Estimate, covariance and epoch.
#[derive(Debug, Clone, PartialEq)]
pub struct FilterState {
    pub x_hat: DVector<f64>,
    pub p: DMatrix<f64>,
    /// Seconds since filter start.
    pub epoch: f64,
}

impl FilterState {
    pub fn n_clocks(&self) -> usize {
        self.x_hat.len() / 3
    }
}

/// Measured `θ_GNSS − θ_i` for local clocks `i = 1..N`, seconds.
#[derive(Debug, Clone, PartialEq)]
pub struct MeasurementVector {
    pub z: Vec<f64>,
}

impl MeasurementVector {
    pub fn new(z: Vec<f64>) -> Self {
        Self { z }
    }
}

/// Innovation, its covariance and the normalized innovation squared.
#[derive(Debug, Clone, PartialEq)]
pub struct InnovationRecord {
    pub innovation: DVector<f64>,
    pub innovation_cov: DMatrix<f64>,
    pub nis: f64,
}

/// GNSS-minus-ensemble phase and frequency with their variances.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DifferentialEstimate {
    pub theta_hat: f64,
    pub gamma_hat: f64,
    pub theta_var: f64,
    pub gamma_var: f64,
}

/// Model matrices bound to a [`FilterModel`].
#[derive(Debug, Clone)]
pub struct EnsembleFilter {
    model: FilterModel,
    phi: DMatrix<f64>,
    q: DMatrix<f64>,
    h: DMatrix<f64>,
    r: DMatrix<f64>,
    projection: DMatrix<f64>,
}

fn block_diagonal(blocks: &[nalgebra::Matrix3<f64>]) -> DMatrix<f64> {
    let n = blocks.len();
    let mut m = DMatrix::zeros(3 * n, 3 * n);
    for (k, b) in blocks.iter().enumerate() {
        m.view_mut((3 * k, 3 * k), (3, 3)).copy_from(b);
    }
    m
}

/// Measurement matrix: row `i` has +1 at the GNSS phase slot and −1 at clock `i+1`'s.
pub fn measurement_matrix(n_clocks: usize) -> DMatrix<f64> {
    let mut h = DMatrix::zeros(n_clocks - 1, 3 * n_clocks);
    for i in 1..n_clocks {
        h[(i - 1, 0)] = 1.0;
        h[(i - 1, 3 * i)] = -1.0;
    }
    h
}

/// Projection that re-expresses every clock relative to the mean of the local clocks.
pub fn ensemble_projection(n_clocks: usize) -> DMatrix<f64> {
    let locals = (n_clocks - 1) as f64;
    let mut t = DMatrix::identity(3 * n_clocks, 3 * n_clocks);
    for i in 0..n_clocks {
        for j in 1..n_clocks {
            for s in 0..3 {
                t[(3 * i + s, 3 * j + s)] -= 1.0 / locals;
            }
        }
    }
    t
}

impl EnsembleFilter {
    pub fn new(model: FilterModel) -> Result<Self> {
        model.validate()?;
        let n = model.n_clocks();
        let phi_block = transition_block(model.tau)?;
        let phi = block_diagonal(&vec![phi_block; n]);
        let q_blocks = model
            .clock_specs
            .iter()
            .map(|s| process_noise_block(s, model.tau))
            .collect::<Result<Vec<_>>>()?;
        let q = block_diagonal(&q_blocks);
        let h = measurement_matrix(n);
        let r = DMatrix::identity(n - 1, n - 1) * model.r_diag;
        let projection = ensemble_projection(n);
        Ok(Self {
            model,
            phi,
            q,
            h,
            r,
            projection,
        })
    }

    pub fn model(&self) -> &FilterModel {
        &self.model
    }

    pub fn phi(&self) -> &DMatrix<f64> {
        &self.phi
    }

    pub fn q(&self) -> &DMatrix<f64> {
        &self.q
    }

    pub fn h(&self) -> &DMatrix<f64> {
        &self.h
    }

    /// Zero estimate with the model's initial covariance at epoch 0.
    pub fn initial_state(&self) -> FilterState {
        let n = self.model.n_clocks();
        let diag = DVector::from_fn(3 * n, |i, _| self.model.initial_variance[i % 3]);
        FilterState {
            x_hat: DVector::zeros(3 * n),
            p: DMatrix::from_diagonal(&diag),
            epoch: 0.0,
        }
    }

    fn check_state(&self, state: &FilterState) -> Result<()> {
        let dim = 3 * self.model.n_clocks();
        if state.x_hat.len() != dim || state.p.shape() != (dim, dim) {
            return Err(Error::invalid(format!(
                "state dimension does not match a {dim}-state filter"
            )));
        }
        Ok(())
    }

    /// Time update over one nominal step.
    pub fn predict(&self, state: &FilterState) -> Result<FilterState> {
        self.check_state(state)?;
        let x_hat = &self.phi * &state.x_hat;
        let p = symmetrize(&(&self.phi * &state.p * self.phi.transpose() + &self.q));
        if x_hat.iter().chain(p.iter()).any(|v| !v.is_finite()) {
            return Err(Error::Numerical {
                message: "prediction produced non-finite values".into(),
                condition: f64::INFINITY,
            });
        }
        Ok(FilterState {
            x_hat,
            p,
            epoch: state.epoch + self.model.tau,
        })
    }

    /// Measurement update followed by ensemble re-expression.
    pub fn update(
        &self,
        state: &FilterState,
        z: &MeasurementVector,
    ) -> Result<(FilterState, InnovationRecord)> {
        self.check_state(state)?;
        let rows = self.model.n_clocks() - 1;
        if z.z.len() != rows {
            return Err(Error::invalid(format!(
                "measurement has {} entries, filter expects {rows}",
                z.z.len()
            )));
        }
        if z.z.iter().any(|v| !v.is_finite()) {
            return Err(Error::invalid("measurement entries must be finite"));
        }
        let zv = DVector::from_column_slice(&z.z);
        let innovation = &zv - &self.h * &state.x_hat;
        let c = symmetrize(&(&self.h * &state.p * self.h.transpose() + &self.r));
        let chol = c.clone().cholesky().ok_or_else(|| Error::Numerical {
            message: "innovation covariance is not positive definite".into(),
            condition: condition_estimate(&c),
        })?;
        let ph_t = &state.p * self.h.transpose();
        let gain = chol.solve(&ph_t.transpose()).transpose();
        let x_hat = &state.x_hat + &gain * &innovation;
        let dim = state.x_hat.len();
        let a = DMatrix::identity(dim, dim) - &gain * &self.h;
        let p = symmetrize(&(&a * &state.p * a.transpose() + &gain * &self.r * gain.transpose()));
        let nis = innovation.dot(&chol.solve(&innovation));
        let updated = self.rebase(&FilterState {
            x_hat,
            p,
            epoch: state.epoch,
        });
        Ok((
            updated,
            InnovationRecord {
                innovation,
                innovation_cov: c,
                nis,
            },
        ))
    }

    /// Predict, then update when a measurement is available.
    pub fn step(
        &self,
        state: &FilterState,
        z: Option<&MeasurementVector>,
    ) -> Result<(FilterState, Option<InnovationRecord>)> {
        let predicted = self.predict(state)?;
        match z {
            Some(z) => {
                let (s, rec) = self.update(&predicted, z)?;
                Ok((s, Some(rec)))
            }
            None => Ok((predicted, None)),
        }
    }

    /// Removes the common-mode component that no measurement can observe.
    ///
    /// Estimates are re-expressed relative to the mean of the local clocks and
    /// the covariance is projected accordingly, which bounds its growth along
    /// the uniform-translation direction. Clock differences are unchanged.
    pub fn rebase(&self, state: &FilterState) -> FilterState {
        let t = &self.projection;
        FilterState {
            x_hat: t * &state.x_hat,
            p: symmetrize(&(t * &state.p * t.transpose())),
            epoch: state.epoch,
        }
    }
}

/// Builds the model matrices and the initial state.
pub fn build_filter(model: FilterModel) -> Result<(EnsembleFilter, FilterState)> {
    let filter = EnsembleFilter::new(model)?;
    let state = filter.initial_state();
    Ok((filter, state))
}

/// GNSS phase and frequency relative to the mean of the local clocks.
///
/// The variances are the GNSS-slot diagonal entries of `p`; after an update
/// (which rebases the state) they are the variances of the differential.
pub fn gnss_differential_estimate(state: &FilterState) -> DifferentialEstimate {
    let n = state.n_clocks();
    let locals = (n - 1) as f64;
    let mean = |slot: usize| (1..n).map(|i| state.x_hat[3 * i + slot]).sum::<f64>() / locals;
    DifferentialEstimate {
        theta_hat: state.x_hat[0] - mean(0),
        gamma_hat: state.x_hat[1] - mean(1),
        theta_var: state.p[(0, 0)],
        gamma_var: state.p[(1, 1)],
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::check_covariance;

    fn model(n: usize) -> FilterModel {
        FilterModel::new(vec![NoiseSpec::new(1e-18, 1e-20, 0.0); n], 1.0, 1e-18)
    }

    #[test]
    fn build_shapes() {
        let (f, s) = build_filter(model(2)).unwrap();
        assert_eq!(s.x_hat.len(), 6);
        assert_eq!(
            f.h().row(0).iter().copied().collect::<Vec<_>>(),
            vec![1.0, 0.0, 0.0, -1.0, 0.0, 0.0]
        );
        let (f, s) = build_filter(model(4)).unwrap();
        assert_eq!(s.p.shape(), (12, 12));
        assert_eq!(f.h().nrows(), 3);
        assert!(build_filter(model(1)).is_err());
    }

    #[test]
    fn common_mode_is_unobservable() {
        for n in 2..8 {
            let h = measurement_matrix(n);
            let u = DVector::from_fn(3 * n, |i, _| if i % 3 == 0 { 1.0 } else { 0.0 });
            assert!((h * u).amax() == 0.0);
        }
    }

    #[test]
    fn fresh_identity_filter_estimate() {
        let (_, s) = build_filter(model(3).with_initial_variance([1.0; 3])).unwrap();
        let d = gnss_differential_estimate(&s);
        assert_eq!(
            (d.theta_hat, d.gamma_hat, d.theta_var, d.gamma_var),
            (0.0, 0.0, 1.0, 1.0)
        );
    }

    #[test]
    fn predict_examples() {
        let m =
            FilterModel::new(vec![NoiseSpec::IDEAL; 2], 1.0, 0.0).with_initial_variance([1.0; 3]);
        let (f, s) = build_filter(m).unwrap();
        let p = f.predict(&s).unwrap();
        assert_eq!(p.x_hat, DVector::zeros(6));
        assert_eq!(p.p, f.phi() * f.phi().transpose());
        assert_eq!(p.epoch, 1.0);

        let mut s2 = s.clone();
        s2.x_hat[1] = 1e-9;
        let m2 = FilterModel::new(vec![NoiseSpec::IDEAL; 2], 2.5, 0.0);
        let f2 = EnsembleFilter::new(m2).unwrap();
        assert_eq!(f2.predict(&s2).unwrap().x_hat[0], 2.5e-9);
    }

    #[test]
    fn predict_grows_trace() {
        let (f, mut s) = build_filter(model(4)).unwrap();
        for _ in 0..50 {
            let next = f.predict(&s).unwrap();
            assert!(next.p.trace() >= s.p.trace());
            s = next;
        }
    }

    #[test]
    fn zero_innovation_shrinks_covariance() {
        let (f, s) = build_filter(model(3)).unwrap();
        let s = f.predict(&s).unwrap();
        let (u, rec) = f
            .update(&s, &MeasurementVector::new(vec![0.0, 0.0]))
            .unwrap();
        assert_eq!(u.x_hat, s.x_hat);
        assert!(u.p.trace() < s.p.trace());
        assert_eq!(rec.nis, 0.0);
        check_covariance(&u.p).unwrap();
    }

    #[test]
    fn deterministic_difference_converges() {
        let m = FilterModel::new(vec![NoiseSpec::IDEAL; 2], 1.0, 1e-20);
        let (f, mut s) = build_filter(m).unwrap();
        let d = 3.7e-7;
        for _ in 0..10 {
            s = f
                .step(&s, Some(&MeasurementVector::new(vec![d])))
                .unwrap()
                .0;
        }
        assert!((gnss_differential_estimate(&s).theta_hat - d).abs() < 1e-12);
    }

    #[test]
    fn update_rejects_wrong_dimension() {
        let (f, s) = build_filter(model(3)).unwrap();
        assert!(f.update(&s, &MeasurementVector::new(vec![0.0])).is_err());
    }

    #[test]
    fn singular_innovation_covariance_is_numerical_error() {
        let m =
            FilterModel::new(vec![NoiseSpec::IDEAL; 2], 1.0, 0.0).with_initial_variance([0.0; 3]);
        let (f, s) = build_filter(m).unwrap();
        match f.update(&s, &MeasurementVector::new(vec![1e-9])) {
            Err(Error::Numerical { condition, .. }) => assert!(condition.is_infinite()),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn rebase_preserves_differentials() {
        let (f, mut s) = build_filter(model(4)).unwrap();
        s.x_hat = DVector::from_fn(12, |i, _| (i as f64 * 0.37).sin() * 1e-7);
        let before = gnss_differential_estimate(&s);
        let after = gnss_differential_estimate(&f.rebase(&s));
        assert!((before.theta_hat - after.theta_hat).abs() < 1e-15);
        assert!((before.gamma_hat - after.gamma_hat).abs() < 1e-15);
        let twice = f.rebase(&f.rebase(&s));
        assert!((&twice.p - &f.rebase(&s).p).amax() < 1e-20);
    }
}
