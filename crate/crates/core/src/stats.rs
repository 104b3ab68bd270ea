//! Time-average estimators with standard errors.
//!
//! All accumulators split the window into fixed batches, sum each batch on
//! the rayon pool and reduce the batch sums in order, so results depend only
//! on the window and never on the thread count. The batch sums double as
//! batch means for a serial-correlation-robust standard error.

use std::ops::Range;

use nalgebra::DMatrix;
use rayon::prelude::*;

use crate::error::{GlssError, Result};

/// Sparse vector as `(index, value)` pairs; indices may repeat.
pub type SparseVec = Vec<(usize, f64)>;

/// Upper bound on the number of batches a window is split into.
pub const MAX_BATCHES: usize = 100;
/// Minimum samples per batch.
pub const MIN_BATCH_LEN: usize = 50;

/// Equal-size contiguous batches covering `range`.
pub fn batches(range: Range<usize>) -> Vec<Range<usize>> {
    let n = range.len();
    if n == 0 {
        return Vec::new();
    }
    let b = (n / MIN_BATCH_LEN).clamp(1, MAX_BATCHES);
    (0..b)
        .map(|i| range.start + i * n / b..range.start + (i + 1) * n / b)
        .collect()
}

/// Standard error of a mean from batch means (weights by batch length).
fn batch_se(total: f64, count: usize, batch_sums: &[(f64, usize)]) -> f64 {
    let b = batch_sums.len();
    if b < 2 {
        return 0.0;
    }
    let mean = total / count as f64;
    let n = count as f64;
    let ss: f64 = batch_sums
        .iter()
        .map(|(s, len)| {
            let d = s - mean * *len as f64;
            d * d
        })
        .sum();
    (ss / (n * n) * b as f64 / (b - 1) as f64).sqrt()
}

fn naive_se(sum: f64, sumsq: f64, count: usize) -> f64 {
    let n = count as f64;
    let m = sum / n;
    ((sumsq / n - m * m).max(0.0) / n).sqrt()
}

/// Means of `k` scalar statistics with standard errors.
#[derive(Clone, Debug)]
pub struct MeanStats {
    pub mean: Vec<f64>,
    /// `max(iid standard error, batch-means standard error)`.
    pub se: Vec<f64>,
    pub count: usize,
}

pub fn mean_stats<F>(range: Range<usize>, k: usize, fill: F) -> Result<MeanStats>
where
    F: Fn(usize, &mut [f64]) + Sync,
{
    if range.is_empty() {
        return Err(GlssError::Window("empty averaging window".into()));
    }
    let parts: Vec<(Vec<f64>, Vec<f64>, usize)> = batches(range.clone())
        .into_par_iter()
        .map(|r| {
            let mut buf = vec![0.0; k];
            let mut s = vec![0.0; k];
            let mut s2 = vec![0.0; k];
            let len = r.len();
            for t in r {
                buf.iter_mut().for_each(|b| *b = 0.0);
                fill(t, &mut buf);
                for i in 0..k {
                    s[i] += buf[i];
                    s2[i] += buf[i] * buf[i];
                }
            }
            (s, s2, len)
        })
        .collect();
    let count = range.len();
    let mut mean = vec![0.0; k];
    let mut se = vec![0.0; k];
    for i in 0..k {
        let sum: f64 = parts.iter().map(|p| p.0[i]).sum();
        let sumsq: f64 = parts.iter().map(|p| p.1[i]).sum();
        let bs: Vec<(f64, usize)> = parts.iter().map(|p| (p.0[i], p.2)).collect();
        mean[i] = sum / count as f64;
        se[i] = naive_se(sum, sumsq, count).max(batch_se(sum, count, &bs));
    }
    Ok(MeanStats { mean, se, count })
}

/// Empirical cross second moment `E[a(t) b(t)ᵀ]` with entrywise standard
/// errors.
#[derive(Clone, Debug)]
pub struct CrossStats {
    pub mean: DMatrix<f64>,
    pub se: DMatrix<f64>,
    pub count: usize,
}

impl CrossStats {
    /// Largest entrywise `|mean| / se` (entries with zero se and zero mean
    /// count as 0, zero se with nonzero mean as infinity).
    pub fn max_z(&self) -> f64 {
        self.mean
            .iter()
            .zip(self.se.iter())
            .map(|(m, s)| z_score(*m, *s))
            .fold(0.0, f64::max)
    }

    pub fn max_se(&self) -> f64 {
        self.se.iter().copied().fold(0.0, f64::max)
    }

    pub fn block(&self, r: usize, c: usize, nr: usize, nc: usize) -> CrossStats {
        CrossStats {
            mean: self.mean.view((r, c), (nr, nc)).into_owned(),
            se: self.se.view((r, c), (nr, nc)).into_owned(),
            count: self.count,
        }
    }
}

pub fn z_score(mean: f64, se: f64) -> f64 {
    if mean == 0.0 {
        0.0
    } else if se == 0.0 {
        f64::INFINITY
    } else {
        mean.abs() / se
    }
}

/// Accumulates `a(t) b(t)ᵀ` over `range`; `fill` writes the sparse vectors
/// `a(t)` and `b(t)` (both cleared before each call).
pub fn cross_stats<F>(range: Range<usize>, da: usize, db: usize, fill: F) -> Result<CrossStats>
where
    F: Fn(usize, &mut SparseVec, &mut SparseVec) + Sync,
{
    if range.is_empty() {
        return Err(GlssError::Window("empty averaging window".into()));
    }
    let parts: Vec<(DMatrix<f64>, DMatrix<f64>, usize)> = batches(range.clone())
        .into_par_iter()
        .map(|r| {
            let mut s = DMatrix::zeros(da, db);
            let mut s2 = DMatrix::zeros(da, db);
            let mut a = SparseVec::new();
            let mut b = SparseVec::new();
            let len = r.len();
            // per-sample products are squared entrywise, so repeated indices
            // must be merged before accumulating
            let mut pa = vec![0.0; da];
            let mut pb = vec![0.0; db];
            for t in r {
                a.clear();
                b.clear();
                fill(t, &mut a, &mut b);
                let ia = merge(&a, &mut pa);
                let ib = merge(&b, &mut pb);
                for &i in &ia {
                    for &j in &ib {
                        let v = pa[i] * pb[j];
                        s[(i, j)] += v;
                        s2[(i, j)] += v * v;
                    }
                }
                for &i in &ia {
                    pa[i] = 0.0;
                }
                for &j in &ib {
                    pb[j] = 0.0;
                }
            }
            (s, s2, len)
        })
        .collect();
    let count = range.len();
    let mut sum = DMatrix::zeros(da, db);
    let mut sumsq = DMatrix::zeros(da, db);
    for (s, s2, _) in &parts {
        sum += s;
        sumsq += s2;
    }
    let mut se = DMatrix::zeros(da, db);
    let mut bs = Vec::with_capacity(parts.len());
    for i in 0..da {
        for j in 0..db {
            bs.clear();
            bs.extend(parts.iter().map(|p| (p.0[(i, j)], p.2)));
            se[(i, j)] = naive_se(sum[(i, j)], sumsq[(i, j)], count).max(batch_se(sum[(i, j)], count, &bs));
        }
    }
    Ok(CrossStats {
        mean: sum / count as f64,
        se,
        count,
    })
}

/// Scatters `v` into the dense scratch `dense` and returns the touched
/// indices (each once).
fn merge(v: &SparseVec, dense: &mut [f64]) -> Vec<usize> {
    let mut idx = Vec::with_capacity(v.len());
    for &(i, x) in v {
        if x == 0.0 {
            continue;
        }
        if dense[i] == 0.0 && !idx.contains(&i) {
            idx.push(i);
        }
        dense[i] += x;
    }
    idx
}

/// Normal-equation sums `Σ x xᵀ` and `Σ x yᵀ` for a regression with sparse
/// regressors `x(t)` and dense targets `y(t)`.
#[derive(Clone, Debug)]
pub struct NormalSums {
    pub gram: DMatrix<f64>,
    pub cross: DMatrix<f64>,
    pub count: usize,
}

pub fn normal_sums<F>(range: Range<usize>, dx: usize, dy: usize, fill: F) -> Result<NormalSums>
where
    F: Fn(usize, &mut SparseVec, &mut [f64]) + Sync,
{
    if range.is_empty() {
        return Err(GlssError::Window("empty regression window".into()));
    }
    let parts: Vec<(DMatrix<f64>, DMatrix<f64>)> = batches(range.clone())
        .into_par_iter()
        .map(|r| {
            let mut g = DMatrix::zeros(dx, dx);
            let mut h = DMatrix::zeros(dx, dy);
            let mut x = SparseVec::new();
            let mut y = vec![0.0; dy];
            for t in r {
                x.clear();
                y.iter_mut().for_each(|v| *v = 0.0);
                fill(t, &mut x, &mut y);
                for &(i, xi) in &x {
                    if xi == 0.0 {
                        continue;
                    }
                    for &(j, xj) in &x {
                        g[(i, j)] += xi * xj;
                    }
                    for (j, yj) in y.iter().enumerate() {
                        h[(i, j)] += xi * yj;
                    }
                }
            }
            (g, h)
        })
        .collect();
    let mut gram = DMatrix::zeros(dx, dx);
    let mut cross = DMatrix::zeros(dx, dy);
    for (g, h) in &parts {
        gram += g;
        cross += h;
    }
    Ok(NormalSums {
        gram,
        cross,
        count: range.len(),
    })
}

/// Root mean square over the columns `range` of a `dim × T` sequence
/// (Frobenius norm per sample).
pub fn rms(seq: &DMatrix<f64>, range: Range<usize>) -> f64 {
    if range.is_empty() {
        return 0.0;
    }
    let n = range.len() as f64;
    let ss: f64 = range.map(|t| seq.column(t).norm_squared()).sum();
    (ss / n).sqrt()
}

/// Sample second moment `E[a bᵀ]` of two dense sequences over `range`.
pub fn second_moment(a: &DMatrix<f64>, b: &DMatrix<f64>, range: Range<usize>) -> Result<CrossStats> {
    let (da, db) = (a.nrows(), b.nrows());
    if range.end > a.ncols().min(b.ncols()) {
        return Err(GlssError::Window(format!(
            "window ends at {} but sequences have {} and {} samples",
            range.end,
            a.ncols(),
            b.ncols()
        )));
    }
    cross_stats(range, da, db, |t, xa, xb| {
        xa.extend(a.column(t).iter().copied().enumerate());
        xb.extend(b.column(t).iter().copied().enumerate());
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn batches_cover_window() {
        let b = batches(7..20_007);
        assert_eq!(b.len(), MAX_BATCHES);
        assert_eq!(b[0].start, 7);
        assert_eq!(b.last().unwrap().end, 20_007);
        assert!(b.windows(2).all(|w| w[0].end == w[1].start));
        assert_eq!(batches(0..10).len(), 1);
    }

    #[test]
    fn zero_sequence_gives_exact_zero() {
        let z = DMatrix::zeros(2, 500);
        let s = second_moment(&z, &z, 0..500).unwrap();
        assert_eq!(s.mean, DMatrix::zeros(2, 2));
        assert_eq!(s.max_z(), 0.0);
    }

    #[test]
    fn sparse_repeats_are_merged() {
        let s = cross_stats(0..100, 1, 1, |_, a, b| {
            a.push((0, 1.0));
            a.push((0, 1.0));
            b.push((0, 1.0));
        })
        .unwrap();
        assert_eq!(s.mean[(0, 0)], 2.0);
        assert_eq!(s.se[(0, 0)], 0.0);
    }

    #[test]
    fn white_noise_self_moment_is_identity() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let t = 20_000;
        let v = DMatrix::from_fn(2, t, |_, _| rng.sample::<f64, _>(rand_distr::StandardNormal));
        let s = second_moment(&v, &v, 0..t).unwrap();
        let bound = 5.0 / (t as f64).sqrt();
        assert!((s.mean.clone() - DMatrix::identity(2, 2)).amax() <= bound * 2.0);
        assert!(s.max_se() < 0.02);
    }

    #[test]
    fn mean_stats_matches_direct_average() {
        let s = mean_stats(0..1000, 2, |t, out| {
            out[0] = t as f64;
            out[1] = 1.0;
        })
        .unwrap();
        assert_relative_eq!(s.mean[0], 499.5);
        assert_eq!(s.mean[1], 1.0);
        assert_eq!(s.se[1], 0.0);
    }

    #[test]
    fn batch_se_exceeds_naive_under_autocorrelation() {
        // AR(1) with coefficient 0.9: the long-run variance is 19x the
        // marginal one, so the batch estimate must dominate.
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let n = 50_000;
        let mut x = vec![0.0; n];
        for t in 1..n {
            x[t] = 0.9 * x[t - 1] + rng.sample::<f64, _>(rand_distr::StandardNormal);
        }
        let s = mean_stats(0..n, 1, |t, out| out[0] = x[t]).unwrap();
        let naive = (x.iter().map(|v| v * v).sum::<f64>() / n as f64 / n as f64).sqrt();
        assert!(s.se[0] > 2.5 * naive, "se {} naive {}", s.se[0], naive);
    }

    #[test]
    fn normal_sums_match_dense() {
        let x = DMatrix::from_fn(3, 200, |i, t| ((i + 1) * t % 7) as f64 - 3.0);
        let y = DMatrix::from_fn(1, 200, |_, t| (t % 5) as f64);
        let ns = normal_sums(0..200, 3, 1, |t, xs, ys| {
            xs.extend(x.column(t).iter().copied().enumerate());
            ys[0] = y[(0, t)];
        })
        .unwrap();
        assert_relative_eq!(ns.gram, &x * x.transpose(), epsilon = 1e-9);
        assert_relative_eq!(ns.cross, &x * y.transpose(), epsilon = 1e-9);
    }
}
