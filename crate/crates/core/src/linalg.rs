//! Small dense linear-algebra helpers on top of nalgebra.

use nalgebra::{DMatrix, DVector};

/// Relative tolerance and iteration cap for the power-iteration fallback.
pub const POWER_TOL: f64 = 1e-10;
pub const POWER_MAX_ITER: usize = 10_000;

/// Largest dimension for which the spectral radius is taken from a dense
/// eigendecomposition.
pub const DENSE_EIGEN_MAX: usize = 64;

pub fn frobenius(m: &DMatrix<f64>) -> f64 {
    m.norm()
}

/// Spectral radius from the full (complex) spectrum.
pub fn spectral_radius_dense(m: &DMatrix<f64>) -> f64 {
    if m.nrows() == 0 {
        return 0.0;
    }
    if m.iter().all(|v| *v == 0.0) {
        return 0.0;
    }
    m.complex_eigenvalues().iter().map(|z| z.norm()).fold(0.0, f64::max)
}

/// Spectral radius by power iteration started from `start`.
///
/// Stops when successive growth factors agree to `tol` (relative). If the
/// cap is hit (cyclic dominant spectrum), the Gelfand estimate
/// `|M^k v|^(1/k)` is returned instead.
pub fn spectral_radius_power(m: &DMatrix<f64>, start: &DVector<f64>, tol: f64, max_iter: usize) -> f64 {
    let n0 = start.norm();
    if m.nrows() == 0 || n0 == 0.0 {
        return 0.0;
    }
    let mut v = start / n0;
    let mut log_growth = 0.0;
    let mut prev_step = f64::NAN;
    let mut settled = 0;
    let mut lambda = 0.0;
    for k in 1..=max_iter {
        let w = m * &v;
        lambda = w.norm();
        if lambda == 0.0 {
            return 0.0;
        }
        log_growth += lambda.ln();
        let next = w / lambda;
        // direction change; with contraction ratio r the remaining error is
        // about step / (1 − r)
        let step = (&next - &v).norm();
        let ratio = (step / prev_step).min(0.999);
        let bound = if ratio.is_finite() {
            step / (1.0 - ratio)
        } else {
            f64::INFINITY
        };
        settled = if bound <= tol { settled + 1 } else { 0 };
        v = next;
        prev_step = step;
        if step == 0.0 || settled >= 3 {
            return lambda;
        }
        if k == max_iter {
            return (log_growth / k as f64).exp();
        }
    }
    lambda
}

/// Symmetric square root of a symmetric positive semidefinite matrix.
/// Negative eigenvalues from rounding are clipped to zero.
pub fn psd_sqrt(m: &DMatrix<f64>) -> DMatrix<f64> {
    if m.nrows() == 0 {
        return m.clone();
    }
    let sym = symmetrize(m);
    let eig = sym.symmetric_eigen();
    let d = DMatrix::from_diagonal(&eig.eigenvalues.map(|l| l.max(0.0).sqrt()));
    &eig.eigenvectors * d * eig.eigenvectors.transpose()
}

pub fn symmetrize(m: &DMatrix<f64>) -> DMatrix<f64> {
    (m + m.transpose()) * 0.5
}

pub fn min_eigenvalue_sym(m: &DMatrix<f64>) -> f64 {
    if m.nrows() == 0 {
        return f64::INFINITY;
    }
    symmetrize(m)
        .symmetric_eigen()
        .eigenvalues
        .iter()
        .copied()
        .fold(f64::INFINITY, f64::min)
}

pub fn asymmetry(m: &DMatrix<f64>) -> f64 {
    (m - m.transpose()).norm()
}

/// Singular values in descending order.
pub fn singular_values(m: &DMatrix<f64>) -> Vec<f64> {
    if m.nrows() == 0 || m.ncols() == 0 {
        return Vec::new();
    }
    let mut sv: Vec<f64> = m.clone().svd(false, false).singular_values.iter().copied().collect();
    sv.sort_by(|a, b| b.total_cmp(a));
    sv
}

/// Number of singular values above `rel_tol * max_singular_value`.
pub fn numerical_rank(sv: &[f64], rel_tol: f64) -> usize {
    let max = sv.iter().copied().fold(0.0, f64::max);
    if max == 0.0 {
        return 0;
    }
    sv.iter().filter(|s| **s > rel_tol * max).count()
}

pub fn condition_number(m: &DMatrix<f64>) -> f64 {
    let sv = singular_values(m);
    match (sv.first(), sv.last()) {
        (Some(&hi), Some(&lo)) if lo > 0.0 => hi / lo,
        _ => f64::INFINITY,
    }
}

/// Least-squares solution of `a x = b` via SVD.
pub fn lstsq(a: &DMatrix<f64>, b: &DMatrix<f64>) -> Option<DMatrix<f64>> {
    let svd = a.clone().svd(true, true);
    let eps = f64::EPSILON * a.nrows().max(a.ncols()) as f64 * svd.singular_values.max();
    svd.solve(b, eps).ok()
}

/// Vertical stack of equally wide blocks.
pub fn vstack(blocks: &[DMatrix<f64>]) -> DMatrix<f64> {
    let cols = blocks.first().map_or(0, |b| b.ncols());
    let rows = blocks.iter().map(|b| b.nrows()).sum();
    let mut out = DMatrix::zeros(rows, cols);
    let mut r = 0;
    for b in blocks {
        out.view_mut((r, 0), (b.nrows(), cols)).copy_from(b);
        r += b.nrows();
    }
    out
}

/// Horizontal stack of equally tall blocks.
pub fn hstack(blocks: &[DMatrix<f64>]) -> DMatrix<f64> {
    let rows = blocks.first().map_or(0, |b| b.nrows());
    let cols = blocks.iter().map(|b| b.ncols()).sum();
    let mut out = DMatrix::zeros(rows, cols);
    let mut c = 0;
    for b in blocks {
        out.view_mut((0, c), (rows, b.ncols())).copy_from(b);
        c += b.ncols();
    }
    out
}

pub fn block_diag(a: &DMatrix<f64>, b: &DMatrix<f64>) -> DMatrix<f64> {
    let mut out = DMatrix::zeros(a.nrows() + b.nrows(), a.ncols() + b.ncols());
    out.view_mut((0, 0), a.shape()).copy_from(a);
    out.view_mut(a.shape(), b.shape()).copy_from(b);
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn dense_and_power_radius_agree_on_rotation_scaled() {
        // eigenvalues 0.5 and 0.2
        let m = DMatrix::from_row_slice(2, 2, &[0.5, 1.0, 0.0, 0.2]);
        let start = DVector::from_element(2, 1.0);
        let dense = spectral_radius_dense(&m);
        let power = spectral_radius_power(&m, &start, 1e-13, 10_000);
        assert_relative_eq!(dense, 0.5, epsilon = 1e-12);
        assert_relative_eq!(power, 0.5, epsilon = 1e-8);
    }

    #[test]
    fn power_iteration_cyclic_falls_back_to_gelfand() {
        // pure rotation scaled by 0.7: |lambda| = 0.7 for both eigenvalues
        let m = DMatrix::from_row_slice(2, 2, &[0.0, -0.7, 0.7, 0.0]);
        let start = DVector::from_vec(vec![1.0, 0.3]);
        let r = spectral_radius_power(&m, &start, 1e-12, 500);
        assert_relative_eq!(r, 0.7, epsilon = 1e-3);
    }

    #[test]
    fn psd_sqrt_squares_back() {
        let m = DMatrix::from_row_slice(2, 2, &[2.0, 0.5, 0.5, 1.0]);
        let s = psd_sqrt(&m);
        assert_relative_eq!(&s * &s, m, epsilon = 1e-12);
    }

    #[test]
    fn rank_counts_relative_threshold() {
        assert_eq!(numerical_rank(&[1.0, 1e-3, 1e-12], 1e-8), 2);
        assert_eq!(numerical_rank(&[0.0, 0.0], 1e-8), 0);
    }
}
