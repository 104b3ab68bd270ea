//! Ridge-regularized least squares on accumulated normal equations.

use std::ops::Range;

use nalgebra::DMatrix;
use rayon::prelude::*;

use crate::error::{GlssError, Result};
use crate::stats::{self, NormalSums, SparseVec};

/// Default ridge: `1e-8 · trace(G/T) / dim`.
pub fn default_ridge(gram: &DMatrix<f64>, count: usize) -> f64 {
    let dim = gram.nrows().max(1) as f64;
    1e-8 * gram.trace() / count.max(1) as f64 / dim
}

/// Fitted coefficients `β` (`dx × dy`) with `y ≈ βᵀ x`.
#[derive(Clone, Debug)]
pub struct Regression {
    pub coef: DMatrix<f64>,
    pub ridge: f64,
    pub count: usize,
}

/// Solves `(G/T + λ I) β = H/T` by Cholesky. `ridge = None` picks the
/// default; `Some(0.0)` with a singular Gram is an error.
pub fn solve(sums: &NormalSums, ridge: Option<f64>) -> Result<Regression> {
    let dx = sums.gram.nrows();
    let n = sums.count.max(1) as f64;
    let lambda = ridge.unwrap_or_else(|| default_ridge(&sums.gram, sums.count));
    if lambda < 0.0 || !lambda.is_finite() {
        return Err(GlssError::Input(format!("ridge must be nonnegative, got {lambda}")));
    }
    if dx == 0 {
        return Ok(Regression {
            coef: DMatrix::zeros(0, sums.cross.ncols()),
            ridge: lambda,
            count: sums.count,
        });
    }
    let mut g = &sums.gram / n;
    for i in 0..dx {
        g[(i, i)] += lambda;
    }
    let h = &sums.cross / n;
    let chol = g.clone().cholesky().ok_or(GlssError::SingularRegression { dim: dx })?;
    // Cholesky succeeds on numerically singular matrices with tiny pivots
    let diag = chol.l_dirty().diagonal();
    let max = diag.iter().fold(0.0f64, |a, b| a.max(b.abs()));
    let min = diag.iter().fold(f64::INFINITY, |a, b| a.min(b.abs()));
    if min <= 1e-7 * max {
        return Err(GlssError::SingularRegression { dim: dx });
    }
    Ok(Regression {
        coef: chol.solve(&h),
        ridge: lambda,
        count: sums.count,
    })
}

/// Residual second moment `E[(y − βᵀx)(y − βᵀx)ᵀ]` from the sums and
/// `Σ y yᵀ`, restricted to the first `k` regressors.
pub fn residual_moment(sums: &NormalSums, yy: &DMatrix<f64>, k: usize, ridge: Option<f64>) -> Result<DMatrix<f64>> {
    let sub = NormalSums {
        gram: sums.gram.view((0, 0), (k, k)).into_owned(),
        cross: sums.cross.rows(0, k).into_owned(),
        count: sums.count,
    };
    let fit = solve(&sub, ridge)?;
    let b = &fit.coef;
    let n = sums.count as f64;
    let r = yy - b.transpose() * &sub.cross - sub.cross.transpose() * b + b.transpose() * &sub.gram * b;
    Ok(r / n)
}

/// Fitted values `βᵀ x(t)` for `t` in `range`, as a `dy × horizon` matrix
/// with zero columns outside the range.
pub fn predict<F>(horizon: usize, range: Range<usize>, coef: &DMatrix<f64>, fill: F) -> DMatrix<f64>
where
    F: Fn(usize, &mut SparseVec) + Sync,
{
    let dy = coef.ncols();
    let parts: Vec<(usize, DMatrix<f64>)> = stats::batches(range)
        .into_par_iter()
        .map(|r| {
            let mut out = DMatrix::zeros(dy, r.len());
            let mut x = SparseVec::new();
            for (c, t) in r.clone().enumerate() {
                x.clear();
                fill(t, &mut x);
                for &(i, xi) in &x {
                    for j in 0..dy {
                        out[(j, c)] += coef[(i, j)] * xi;
                    }
                }
            }
            (r.start, out)
        })
        .collect();
    let mut full = DMatrix::zeros(dy, horizon);
    for (start, block) in parts {
        full.columns_mut(start, block.ncols()).copy_from(&block);
    }
    full
}
