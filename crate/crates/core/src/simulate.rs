//! Trajectory simulation, z-processes and word-indexed covariances.

use std::collections::BTreeMap;
use std::ops::Range;

use nalgebra::{DMatrix, DVector};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{GlssError, Result};
use crate::linalg;
use crate::model::{default_burn_in, GlssModel};
use crate::report::{Check, ValidationReport};
use crate::stats::{self, CrossStats, SparseVec};
use crate::switching::{sample_switching, SwitchingSpec};
use crate::words::{admissible_words, Alphabet, Letter, Word};

/// Seeds of the three independent random streams.
#[derive(Clone, Copy, Debug, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub struct Seeds {
    pub switching: u64,
    pub input: u64,
    pub noise: u64,
}

impl Default for Seeds {
    fn default() -> Self {
        Seeds {
            switching: 1,
            input: 2,
            noise: 3,
        }
    }
}

impl Seeds {
    /// Derived seed triple for the i-th member of a batch.
    pub fn offset(self, i: u64) -> Seeds {
        let k = i.wrapping_mul(0x9E37_79B9_7F4A_7C15);
        Seeds {
            switching: self.switching ^ k,
            input: self.input ^ k.rotate_left(21),
            noise: self.noise ^ k.rotate_left(42),
        }
    }
}

/// Sample paths over the window `t = 0..T`. Each signal is `dim × T`.
#[derive(Clone, Debug, PartialEq)]
pub struct Trajectory {
    pub u: DMatrix<f64>,
    pub pi: DMatrix<f64>,
    pub v: DMatrix<f64>,
    pub x: DMatrix<f64>,
    pub y: DMatrix<f64>,
    pub seeds: Seeds,
    pub burn_in: usize,
    /// Derived processes (`ys`, `es`, ...) attached after the fact.
    pub extra: BTreeMap<String, DMatrix<f64>>,
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.pi.ncols()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Looks up a process by name: `u`, `v`, `x`, `y`, `pi` or an attached
    /// derived process.
    pub fn process(&self, name: &str) -> Result<&DMatrix<f64>> {
        match name {
            "u" => Ok(&self.u),
            "v" => Ok(&self.v),
            "x" => Ok(&self.x),
            "y" => Ok(&self.y),
            "pi" => Ok(&self.pi),
            other => self
                .extra
                .get(other)
                .ok_or_else(|| GlssError::Lookup(other.to_string())),
        }
    }
}

/// Simulates the model from `x = 0` at `−burn_in`, discarding the burn-in.
/// `burn_in = None` selects [`default_burn_in`].
pub fn simulate(model: &GlssModel, horizon: usize, burn_in: Option<usize>, seeds: Seeds) -> Result<Trajectory> {
    if horizon == 0 {
        return Err(GlssError::Input("horizon must be positive".into()));
    }
    let rho = model.require_stable()?;
    let burn = burn_in.unwrap_or_else(|| default_burn_in(rho));
    let total = horizon + burn;
    let pi = sample_switching(&model.switching, total, seeds.switching)?;
    let regimes = regimes(&model.switching, &pi);
    let u = white_signal(&regimes, &model.noise.u_factors, model.dims.nu, seeds.input);
    let v = white_signal(&regimes, &model.noise.v_factors, model.dims.nn, seeds.noise);
    let x0 = DVector::zeros(model.dims.nx);
    let (x, y) = propagate(model, &pi, &u, &v, &x0)?;
    let keep = |m: DMatrix<f64>| m.columns(burn, horizon).into_owned();
    Ok(Trajectory {
        u: keep(u),
        pi: keep(pi),
        v: keep(v),
        x: keep(x),
        y: keep(y),
        seeds,
        burn_in: burn,
        extra: BTreeMap::new(),
    })
}

/// Regime index of every column of π.
pub fn regimes(spec: &SwitchingSpec, pi: &DMatrix<f64>) -> Vec<usize> {
    (0..pi.ncols())
        .map(|t| {
            let col: Vec<f64> = pi.column(t).iter().copied().collect();
            spec.regime_of_column(&col)
        })
        .collect()
}

/// Gaussian signal with conditional covariance `L_r L_rᵀ` in regime `r`.
pub fn white_signal(regimes: &[usize], factors: &[DMatrix<f64>], dim: usize, seed: u64) -> DMatrix<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = DMatrix::zeros(dim, regimes.len());
    if dim == 0 {
        return out;
    }
    let width = factors.iter().map(|f| f.ncols()).max().unwrap_or(0);
    let mut xi = DVector::zeros(width);
    for (t, r) in regimes.iter().enumerate() {
        for e in xi.iter_mut() {
            *e = StandardNormal.sample(&mut rng);
        }
        let l = &factors[(*r).min(factors.len() - 1)];
        out.set_column(t, &(l * xi.rows(0, l.ncols())));
    }
    out
}

/// Runs the recursion from `x(0) = x0` on given signals; returns `(x, y)`.
pub fn propagate(
    model: &GlssModel,
    pi: &DMatrix<f64>,
    u: &DMatrix<f64>,
    v: &DMatrix<f64>,
    x0: &DVector<f64>,
) -> Result<(DMatrix<f64>, DMatrix<f64>)> {
    let horizon = pi.ncols();
    let dims = model.dims;
    if pi.nrows() != model.letter_count()
        || u.shape() != (dims.nu, horizon)
        || v.shape() != (dims.nn, horizon)
        || x0.len() != dims.nx
    {
        return Err(GlssError::dim(format!(
            "signals do not match the model: π {}x{}, u {}x{}, v {}x{}",
            pi.nrows(),
            pi.ncols(),
            u.nrows(),
            u.ncols(),
            v.nrows(),
            v.ncols()
        )));
    }
    let mut x = DMatrix::zeros(dims.nx, horizon);
    let mut y = DMatrix::zeros(dims.ny, horizon);
    let mut state = x0.clone();
    for t in 0..horizon {
        x.set_column(t, &state);
        let (ut, vt) = (u.column(t), v.column(t));
        y.set_column(t, &(&model.c * &state + &model.d * ut + &model.f * vt));
        let mut next = DVector::zeros(dims.nx);
        for (s, l) in model.letters.iter().enumerate() {
            let w = pi[(s, t)];
            if w != 0.0 {
                next += (&l.a * &state + &l.b * ut + &l.k * vt) * w;
            }
        }
        state = next;
    }
    Ok((x, y))
}

/// Replays the recursion over a stored trajectory from its first state.
pub fn replay(model: &GlssModel, traj: &Trajectory) -> Result<(DMatrix<f64>, DMatrix<f64>)> {
    let x0 = traj.x.column(0).into_owned();
    propagate(model, &traj.pi, &traj.u, &traj.v, &x0)
}

/// Admissible words up to a depth with the bookkeeping needed to evaluate
/// `m_w(t) = π_w(t−1) / sqrt(p_w)` by suffix recursion
/// `m_{σw}(t) = m_w(t) · π_σ(t−|σw|) / sqrt(p_σ)`.
#[derive(Clone, Debug)]
pub struct ZIndex {
    words: Vec<Word>,
    suffix: Vec<Option<usize>>,
    first: Vec<Letter>,
    inv_sqrt_p: Vec<f64>,
    depth: usize,
}

impl ZIndex {
    pub fn new(alphabet: &Alphabet, weights: &[f64], depth: usize) -> Result<Self> {
        if weights.len() != alphabet.size() {
            return Err(GlssError::dim("one weight per letter required"));
        }
        let words = admissible_words(alphabet, depth)?;
        let pos: std::collections::HashMap<&Word, usize> = words.iter().enumerate().map(|(i, w)| (w, i)).collect();
        let suffix = words
            .iter()
            .map(|w| if w.len() == 1 { None } else { Some(pos[&w.tail()]) })
            .collect();
        let first = words.iter().map(|w| w.first().expect("non-empty")).collect();
        let inv_sqrt_p = weights
            .iter()
            .map(|p| if *p > 0.0 { 1.0 / p.sqrt() } else { 0.0 })
            .collect();
        Ok(ZIndex {
            words,
            suffix,
            first,
            inv_sqrt_p,
            depth,
        })
    }

    pub fn for_spec(spec: &SwitchingSpec, depth: usize) -> Result<Self> {
        Self::new(spec.alphabet(), spec.weights(), depth)
    }

    pub fn words(&self) -> &[Word] {
        &self.words
    }

    pub fn len(&self) -> usize {
        self.words.len()
    }

    pub fn is_empty(&self) -> bool {
        self.words.is_empty()
    }

    pub fn depth(&self) -> usize {
        self.depth
    }

    /// Number of words of length at most `k` (a prefix of the list).
    pub fn count_up_to(&self, k: usize) -> usize {
        self.words.iter().take_while(|w| w.len() <= k).count()
    }

    /// `out[i] = m_{words[i]}(t)`; requires `t >= depth`.
    pub fn multipliers(&self, pi: &DMatrix<f64>, t: usize, out: &mut [f64]) {
        for i in 0..self.words.len() {
            let base = match self.suffix[i] {
                None => 1.0,
                Some(j) => out[j],
            };
            out[i] = if base == 0.0 {
                0.0
            } else {
                let s = self.first[i];
                base * pi[(s, t - self.words[i].len())] * self.inv_sqrt_p[s]
            };
        }
    }

    /// Appends `z^r_w(t)` for every word at `offset + i·dim`, skipping
    /// words with zero multiplier. With `with_eps`, `r(t)` itself goes first
    /// and words start one block later.
    pub fn push_z(&self, out: &mut SparseVec, offset: usize, mult: &[f64], r: &DMatrix<f64>, t: usize, with_eps: bool) {
        let dim = r.nrows();
        let mut base = offset;
        if with_eps {
            out.extend(r.column(t).iter().enumerate().map(|(j, v)| (base + j, *v)));
            base += dim;
        }
        for (i, m) in mult.iter().enumerate() {
            if *m == 0.0 {
                continue;
            }
            let col = r.column(t - self.words[i].len());
            let o = base + i * dim;
            out.extend(col.iter().enumerate().map(|(j, v)| (o + j, v * m)));
        }
    }
}

/// Dense z-processes of one base process: `data[i]` is `dim × T` with the
/// columns `t < start` zero.
#[derive(Clone, Debug)]
pub struct ZSeries {
    pub base: String,
    pub words: Vec<Word>,
    pub dim: usize,
    pub start: usize,
    pub data: Vec<DMatrix<f64>>,
}

impl ZSeries {
    pub fn series(&self, w: &Word) -> Option<&DMatrix<f64>> {
        self.words.iter().position(|x| x == w).map(|i| &self.data[i])
    }
}

/// Entry budget for dense z-series storage.
pub const Z_MEMORY_BUDGET: usize = 200_000_000;

/// Dense z-processes of a named trajectory process up to `depth`.
pub fn compute_z(traj: &Trajectory, spec: &SwitchingSpec, base: &str, depth: usize) -> Result<ZSeries> {
    let r = traj.process(base)?;
    compute_z_of(base, r, &traj.pi, spec, depth)
}

pub fn compute_z_of(
    name: &str,
    r: &DMatrix<f64>,
    pi: &DMatrix<f64>,
    spec: &SwitchingSpec,
    depth: usize,
) -> Result<ZSeries> {
    let horizon = pi.ncols();
    if depth >= horizon {
        return Err(GlssError::Window(format!(
            "depth {depth} needs more than {horizon} samples"
        )));
    }
    let index = ZIndex::for_spec(spec, depth)?;
    let requested = index.len() * horizon * r.nrows();
    if requested > Z_MEMORY_BUDGET {
        return Err(GlssError::Memory {
            requested,
            budget: Z_MEMORY_BUDGET,
        });
    }
    let mut data = vec![DMatrix::zeros(r.nrows(), horizon); index.len()];
    let mut mult = vec![0.0; index.len()];
    for t in depth..horizon {
        index.multipliers(pi, t, &mut mult);
        for (i, m) in mult.iter().enumerate() {
            if *m != 0.0 {
                let src = r.column(t - index.words[i].len()) * *m;
                data[i].set_column(t, &src);
            }
        }
    }
    Ok(ZSeries {
        base: name.to_string(),
        words: index.words.clone(),
        dim: r.nrows(),
        start: depth,
        data,
    })
}

/// `E[a(t) b(t)ᵀ]` over the common window, with standard errors.
pub fn empirical_cov(a: &DMatrix<f64>, b: &DMatrix<f64>, window: Range<usize>) -> Result<CrossStats> {
    if window.is_empty() {
        return Err(GlssError::Window("empty overlap".into()));
    }
    stats::second_moment(a, b, window)
}

/// Whiteness of `r` with respect to π up to `depth`: distinct words are
/// uncorrelated, `E[z_{σv} z_{σv}ᵀ] = E[z_σ z_σᵀ]`, and the letter moments
/// are nonsingular. Statistics are z-scores against `tolerance`.
pub fn whiteness_report(
    r: &DMatrix<f64>,
    pi: &DMatrix<f64>,
    spec: &SwitchingSpec,
    depth: usize,
    tolerance: f64,
) -> Result<ValidationReport> {
    if depth < 2 {
        return Err(GlssError::Input("whiteness needs depth of at least 2".into()));
    }
    let horizon = pi.ncols().min(r.ncols());
    if horizon <= depth {
        return Err(GlssError::Window("trajectory shorter than depth".into()));
    }
    let index = ZIndex::for_spec(spec, depth)?;
    let dim = r.nrows();
    let blocks = index.len() + 1;
    let total = blocks * dim;
    let cs = stats::cross_stats(depth..horizon, total, total, |t, a, b| {
        let mut mult = vec![0.0; index.len()];
        index.multipliers(pi, t, &mut mult);
        index.push_z(a, 0, &mult, r, t, true);
        b.extend_from_slice(a);
    })?;
    let name = |i: usize| {
        if i == 0 {
            "eps".to_string()
        } else {
            index.words()[i - 1].to_string()
        }
    };
    let mut report = ValidationReport::new("whiteness");
    for i in 0..blocks {
        for j in (i + 1).max(1)..blocks {
            let blk = cs.block(i * dim, j * dim, dim, dim);
            report.push(Check::at_most(
                format!("white[{},{}]", name(i), name(j)),
                blk.max_z(),
                tolerance,
            ));
        }
    }
    let letters = spec.size();
    for (i, w) in index.words().iter().enumerate() {
        let wi = i + 1;
        let own = cs.block(wi * dim, wi * dim, dim, dim);
        if w.len() == 1 {
            // scale-free: the moment normalized by its diagonal
            let diag: Vec<f64> = (0..dim).map(|k| own.mean[(k, k)].max(0.0).sqrt()).collect();
            let (mut min_sv, mut se) = (0.0, f64::INFINITY);
            if diag.iter().all(|d| *d > 0.0) {
                let norm = DMatrix::from_fn(dim, dim, |a, b| own.mean[(a, b)] / (diag[a] * diag[b]));
                min_sv = linalg::singular_values(&norm).last().copied().unwrap_or(0.0);
                se = (0..dim * dim)
                    .map(|k| own.se[k] / (diag[k % dim] * diag[k / dim]))
                    .fold(0.0, f64::max);
            }
            report.push(
                Check::above(format!("nonsingular[{w}]"), min_sv, tolerance * se)
                    .with_detail("minimum singular value of the diagonally normalized moment"),
            );
            continue;
        }
        let first = w.first().expect("non-empty");
        debug_assert!(first < letters);
        let head = cs.block((first + 1) * dim, (first + 1) * dim, dim, dim);
        let mut worst: f64 = 0.0;
        for (k, (m1, m2)) in own.mean.iter().zip(head.mean.iter()).enumerate() {
            let se = own.se[k].hypot(head.se[k]);
            worst = worst.max(stats::z_score(m1 - m2, se));
        }
        report.push(Check::at_most(format!("equal[{w}]"), worst, tolerance));
    }
    Ok(report)
}
