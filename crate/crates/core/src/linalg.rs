//! Small dense-matrix helpers shared by the simulation and the filter.

use nalgebra::{DMatrix, Matrix3};

use crate::error::{Error, Result};

/// Relative tolerance for symmetry and PSD checks.
pub const COVARIANCE_TOL: f64 = 1e-12;

/// Returns `(p + pᵀ) / 2`.
pub fn symmetrize(p: &DMatrix<f64>) -> DMatrix<f64> {
    (p + p.transpose()) * 0.5
}

/// Checks that `p` is symmetric and positive semi-definite.
///
/// Symmetry is measured as the largest entry of `p - pᵀ` relative to the
/// largest entry of `p`; the PSD test requires the smallest eigenvalue to be
/// at least `-1e-12 * trace(p)`.
pub fn check_covariance(p: &DMatrix<f64>) -> Result<()> {
    if !p.is_square() {
        return Err(Error::invalid("covariance must be square"));
    }
    if p.iter().any(|v| !v.is_finite()) {
        return Err(Error::invalid("covariance has non-finite entries"));
    }
    let scale = p.amax();
    if scale == 0.0 {
        return Ok(());
    }
    let asym = (p - p.transpose()).amax();
    if asym > COVARIANCE_TOL * scale {
        return Err(Error::invalid(format!(
            "covariance not symmetric (relative deviation {:.3e})",
            asym / scale
        )));
    }
    let min_eig = symmetrize(p).symmetric_eigenvalues().min();
    let trace = p.trace();
    if min_eig < -COVARIANCE_TOL * trace.abs() {
        return Err(Error::invalid(format!(
            "covariance not positive semi-definite (min eigenvalue {min_eig:.3e}, trace {trace:.3e})"
        )));
    }
    Ok(())
}

/// Lower-triangular factor `l` with `l lᵀ = a` for a symmetric PSD 3x3 matrix.
///
/// Pivots that vanish relative to their diagonal entry are treated as exact
/// zeros, so degenerate covariances (a zero density) factor without jitter
/// and the corresponding noise components come out exactly zero.
pub fn psd_cholesky3(a: &Matrix3<f64>) -> Result<Matrix3<f64>> {
    const PIVOT_TOL: f64 = 1e-12;
    let mut l = Matrix3::zeros();
    for j in 0..3 {
        let mut d = a[(j, j)];
        for k in 0..j {
            d -= l[(j, k)] * l[(j, k)];
        }
        let floor = PIVOT_TOL * a[(j, j)].abs();
        if d < -floor.max(f64::MIN_POSITIVE) {
            return Err(Error::Internal(format!(
                "matrix is not positive semi-definite (pivot {j} = {d:.3e})"
            )));
        }
        if d <= floor {
            continue;
        }
        let ljj = d.sqrt();
        l[(j, j)] = ljj;
        for i in (j + 1)..3 {
            let mut s = a[(i, j)];
            for k in 0..j {
                s -= l[(i, k)] * l[(j, k)];
            }
            l[(i, j)] = s / ljj;
        }
    }
    Ok(l)
}

/// Ratio of the largest to the smallest absolute eigenvalue of a symmetric matrix.
pub fn condition_estimate(a: &DMatrix<f64>) -> f64 {
    let eig = symmetrize(a).symmetric_eigenvalues();
    let max = eig.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
    let min = eig.iter().fold(f64::INFINITY, |m, v| m.min(v.abs()));
    if min == 0.0 {
        f64::INFINITY
    } else {
        max / min
    }
}
