//! Frequency-stability statistics and noise-density fitting.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::clock::NoiseSpec;
use crate::error::{Error, Result};

/// Fractional-frequency samples at a fixed spacing.
#[derive(Debug, Clone, PartialEq)]
pub struct FrequencySeries {
    pub values: Vec<f64>,
    /// Sampling interval, seconds.
    pub tau0: f64,
}

/// One variance estimate at averaging time `tau`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StabilityPoint {
    pub tau: f64,
    pub variance: f64,
    /// Number of squared differences averaged.
    pub num_terms: usize,
}

/// Fitted densities and the log-domain RMS misfit.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NoiseFit {
    pub spec: NoiseSpec,
    pub residual: f64,
}

/// Converts phase samples to fractional frequency by first differences.
pub fn phase_to_frequency(phase: &[f64], tau0: f64) -> Result<FrequencySeries> {
    if !(tau0.is_finite() && tau0 > 0.0) {
        return Err(Error::invalid(format!("tau0 must be positive, got {tau0}")));
    }
    if phase.len() < 2 {
        return Err(Error::InsufficientData {
            required: 2,
            actual: phase.len(),
        });
    }
    let values: Vec<f64> = phase.windows(2).map(|w| (w[1] - w[0]) / tau0).collect();
    if values.iter().any(|v| !v.is_finite()) {
        return Err(Error::invalid("phase series contains non-finite values"));
    }
    Ok(FrequencySeries { values, tau0 })
}

fn block_means(values: &[f64], m: usize) -> Vec<f64> {
    values
        .chunks_exact(m)
        .map(|c| c.iter().sum::<f64>() / m as f64)
        .collect()
}

fn check_factor(series: &FrequencySeries, m: usize, blocks: usize) -> Result<()> {
    if m == 0 {
        return Err(Error::invalid("averaging factor must be positive"));
    }
    if !(series.tau0.is_finite() && series.tau0 > 0.0) {
        return Err(Error::invalid("tau0 must be positive"));
    }
    let required = blocks * m;
    if series.values.len() < required {
        return Err(Error::InsufficientData {
            required,
            actual: series.values.len(),
        });
    }
    Ok(())
}

/// Non-overlapping Hadamard variance at averaging factor `m`.
pub fn hadamard_variance(series: &FrequencySeries, m: usize) -> Result<StabilityPoint> {
    check_factor(series, m, 3)?;
    let y = block_means(&series.values, m);
    let terms = y.len() - 2;
    let sum: f64 = y
        .windows(3)
        .map(|w| {
            let d = w[2] - 2.0 * w[1] + w[0];
            d * d
        })
        .sum();
    Ok(StabilityPoint {
        tau: m as f64 * series.tau0,
        variance: sum / (6.0 * terms as f64),
        num_terms: terms,
    })
}

/// Non-overlapping two-sample (Allan) variance at averaging factor `m`.
pub fn allan_variance(series: &FrequencySeries, m: usize) -> Result<StabilityPoint> {
    check_factor(series, m, 2)?;
    let y = block_means(&series.values, m);
    let terms = y.len() - 1;
    let sum: f64 = y
        .windows(2)
        .map(|w| {
            let d = w[1] - w[0];
            d * d
        })
        .sum();
    Ok(StabilityPoint {
        tau: m as f64 * series.tau0,
        variance: sum / (2.0 * terms as f64),
        num_terms: terms,
    })
}

/// Octave-spaced averaging factors from 1 up to a tenth of the record span.
pub fn octave_factors(len: usize) -> Vec<usize> {
    let limit = len / 10;
    std::iter::successors(Some(1usize), |m| m.checked_mul(2))
        .take_while(|&m| m <= limit.max(1) && len >= 3 * m)
        .collect()
}

/// Hadamard variances on the default octave grid.
pub fn hadamard_curve(series: &FrequencySeries) -> Result<Vec<StabilityPoint>> {
    octave_factors(series.values.len())
        .into_iter()
        .map(|m| hadamard_variance(series, m))
        .collect()
}

/// Allan variances on the default octave grid.
pub fn allan_curve(series: &FrequencySeries) -> Result<Vec<StabilityPoint>> {
    octave_factors(series.values.len())
        .into_iter()
        .map(|m| allan_variance(series, m))
        .collect()
}

/// Hadamard variance predicted by the three-density model at `tau`.
pub fn hadamard_model(spec: &NoiseSpec, tau: f64) -> f64 {
    spec.q_theta / tau + spec.q_gamma * tau / 6.0 + 11.0 / 120.0 * spec.q_drift * tau.powi(3)
}

fn basis(tau: f64) -> [f64; 3] {
    [1.0 / tau, tau / 6.0, 11.0 / 120.0 * tau.powi(3)]
}

/// Weighted least squares restricted to the columns in `active`.
fn solve_subset(a: &DMatrix<f64>, b: &DVector<f64>, active: &[usize]) -> Option<[f64; 3]> {
    let sub = a.select_columns(active);
    let norms: Vec<f64> = sub.column_iter().map(|c| c.norm()).collect();
    if norms.iter().any(|&n| n == 0.0 || !n.is_finite()) {
        return None;
    }
    let mut scaled = sub.clone();
    for (j, n) in norms.iter().enumerate() {
        scaled.column_mut(j).scale_mut(1.0 / n);
    }
    let svd = scaled.svd(true, true);
    let smax = svd.singular_values.max();
    let smin = svd.singular_values.min();
    if smin <= 1e-12 * smax {
        return None;
    }
    let x = svd.solve(b, 0.0).ok()?;
    let mut q = [0.0; 3];
    for (k, &j) in active.iter().enumerate() {
        q[j] = x[k] / norms[k];
    }
    Some(q)
}

/// Fits `q1/τ + q2 τ/6 + 11 q3 τ³/120` to Hadamard variances.
///
/// Squared residuals are weighted by `1/σ_H⁴` so every point carries the same
/// relative weight. Non-negativity is enforced by solving over every subset of
/// active densities and keeping the best feasible one, preferring fewer
/// active densities when the misfit is equal to within round-off.
pub fn fit_noise_coefficients(points: &[StabilityPoint]) -> Result<NoiseFit> {
    if points.len() < 3 {
        return Err(Error::InsufficientData {
            required: 3,
            actual: points.len(),
        });
    }
    if points
        .iter()
        .any(|p| !(p.tau.is_finite() && p.tau > 0.0) || !p.variance.is_finite() || p.variance < 0.0)
    {
        return Err(Error::invalid(
            "stability points need positive tau and non-negative finite variance",
        ));
    }
    let tmin = points.iter().map(|p| p.tau).fold(f64::INFINITY, f64::min);
    let tmax = points.iter().map(|p| p.tau).fold(0.0, f64::max);
    if tmin == tmax {
        return Err(Error::invalid(
            "degenerate design: all tau values are equal",
        ));
    }
    if tmax < 10.0 * tmin * (1.0 - 1e-12) {
        return Err(Error::invalid(format!(
            "stability points must span at least a decade of tau (got {tmin} to {tmax})"
        )));
    }

    let used: Vec<&StabilityPoint> = points.iter().filter(|p| p.variance > 0.0).collect();
    if used.is_empty() {
        return Ok(NoiseFit {
            spec: NoiseSpec::IDEAL,
            residual: 0.0,
        });
    }
    let n = used.len();
    let a = DMatrix::from_fn(n, 3, |i, j| basis(used[i].tau)[j] / used[i].variance);
    let b = DVector::from_element(n, 1.0);

    let ssr = |q: &[f64; 3]| -> f64 {
        (0..n)
            .map(|i| {
                let fit: f64 = (0..3).map(|j| a[(i, j)] * q[j]).sum();
                (fit - 1.0).powi(2)
            })
            .sum()
    };

    let mut candidates: Vec<([f64; 3], usize, f64)> = vec![([0.0; 3], 0, n as f64)];
    for mask in 1u8..8 {
        let active: Vec<usize> = (0..3).filter(|j| mask & (1 << j) != 0).collect();
        if let Some(q) = solve_subset(&a, &b, &active) {
            if q.iter().all(|&v| v >= 0.0) {
                candidates.push((q, active.len(), ssr(&q)));
            }
        }
    }
    let best = candidates.iter().map(|c| c.2).fold(f64::INFINITY, f64::min);
    let tol = best + 1e-20 * n as f64;
    let (q, _, _) = candidates
        .iter()
        .filter(|c| c.2 <= tol)
        .min_by(|x, y| x.1.cmp(&y.1).then(x.2.total_cmp(&y.2)))
        .copied()
        .ok_or_else(|| Error::Internal("no feasible noise fit".into()))?;

    let spec = NoiseSpec::new(q[0], q[1], q[2]);
    let residual = (used
        .iter()
        .map(|p| {
            let model = hadamard_model(&spec, p.tau).max(f64::MIN_POSITIVE);
            (model / p.variance).ln().powi(2)
        })
        .sum::<f64>()
        / n as f64)
        .sqrt();
    Ok(NoiseFit { spec, residual })
}
