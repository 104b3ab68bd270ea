//! The GLSS model, its stationarity checks, the stationary Gramian and the
//! truncated stationary state series.

use nalgebra::{DMatrix, DVector};

use crate::error::{GlssError, Result};
use crate::linalg;
use crate::report::{Check, ValidationReport};
use crate::switching::SwitchingSpec;
use crate::words::{self, Alphabet};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Dims {
    pub nx: usize,
    pub nu: usize,
    pub ny: usize,
    pub nn: usize,
}

/// Per-letter matrices `(A_σ, B_σ, K_σ)`.
#[derive(Clone, Debug, PartialEq)]
pub struct LetterMatrices {
    pub a: DMatrix<f64>,
    pub b: DMatrix<f64>,
    pub k: DMatrix<f64>,
}

/// Conditional second moments of the noise `v` and the input `u` given the
/// switching regime, stored as factors `L` with covariance `L Lᵀ`. One entry
/// per regime (see [`SwitchingSpec::regime_count`]); a single entry is
/// shared by all regimes.
#[derive(Clone, Debug, PartialEq)]
pub struct NoiseLaw {
    pub v_factors: Vec<DMatrix<f64>>,
    pub u_factors: Vec<DMatrix<f64>>,
}

impl NoiseLaw {
    /// The same law in every regime.
    pub fn constant(v_factor: DMatrix<f64>, u_factor: DMatrix<f64>) -> Self {
        NoiseLaw {
            v_factors: vec![v_factor],
            u_factors: vec![u_factor],
        }
    }

    pub fn v_factor(&self, regime: usize) -> &DMatrix<f64> {
        &self.v_factors[regime.min(self.v_factors.len() - 1)]
    }

    pub fn u_factor(&self, regime: usize) -> &DMatrix<f64> {
        &self.u_factors[regime.min(self.u_factors.len() - 1)]
    }

    pub fn v_cov(&self, regime: usize) -> DMatrix<f64> {
        let l = self.v_factor(regime);
        l * l.transpose()
    }

    pub fn u_cov(&self, regime: usize) -> DMatrix<f64> {
        let l = self.u_factor(regime);
        l * l.transpose()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct GlssModel {
    pub dims: Dims,
    pub letters: Vec<LetterMatrices>,
    pub c: DMatrix<f64>,
    pub d: DMatrix<f64>,
    pub f: DMatrix<f64>,
    pub switching: SwitchingSpec,
    pub noise: NoiseLaw,
    /// Set for models in innovation form (`F = I`, noise = innovation).
    pub innovation: bool,
}

impl GlssModel {
    /// Checks shapes and builds the model. Statistical admissibility is
    /// checked separately by [`validate_sglss`].
    pub fn new(
        letters: Vec<LetterMatrices>,
        c: DMatrix<f64>,
        d: DMatrix<f64>,
        f: DMatrix<f64>,
        switching: SwitchingSpec,
        noise: NoiseLaw,
    ) -> Result<Self> {
        let p = switching.size();
        if letters.len() != p {
            return Err(GlssError::dim(format!(
                "{} letter matrix sets for an alphabet of {p} letters",
                letters.len()
            )));
        }
        let (ny, nx) = c.shape();
        let nu = d.ncols();
        let nn = f.ncols();
        let dims = Dims { nx, nu, ny, nn };
        let expect = |what: &str, m: &DMatrix<f64>, r: usize, cols: usize| {
            if m.shape() != (r, cols) {
                Err(GlssError::dim(format!(
                    "{what} is {}x{}, expected {r}x{cols}",
                    m.nrows(),
                    m.ncols()
                )))
            } else {
                Ok(())
            }
        };
        expect("D", &d, ny, nu)?;
        expect("F", &f, ny, nn)?;
        for (i, l) in letters.iter().enumerate() {
            expect(&format!("A_{}", i + 1), &l.a, nx, nx)?;
            expect(&format!("B_{}", i + 1), &l.b, nx, nu)?;
            expect(&format!("K_{}", i + 1), &l.k, nx, nn)?;
        }
        let regimes = switching.regime_count();
        for (name, factors, n) in [("Q", &noise.v_factors, nn), ("R", &noise.u_factors, nu)] {
            if factors.len() != 1 && factors.len() != regimes {
                return Err(GlssError::dim(format!(
                    "{} {name} factors, expected 1 or {regimes}",
                    factors.len()
                )));
            }
            for (r, l) in factors.iter().enumerate() {
                if l.nrows() != n {
                    return Err(GlssError::dim(format!(
                        "{name} factor {} has {} rows, expected {n}",
                        r + 1,
                        l.nrows()
                    )));
                }
            }
        }
        Ok(GlssModel {
            dims,
            letters,
            c,
            d,
            f,
            switching,
            noise,
            innovation: false,
        })
    }

    pub fn letter_count(&self) -> usize {
        self.letters.len()
    }

    pub fn alphabet(&self) -> &Alphabet {
        self.switching.alphabet()
    }

    pub fn weights(&self) -> &[f64] {
        self.switching.weights()
    }

    pub fn a_matrices(&self) -> Vec<DMatrix<f64>> {
        self.letters.iter().map(|l| l.a.clone()).collect()
    }

    /// `Q_σ = E[z^v_σ (z^v_σ)ᵀ]`.
    pub fn q_letter(&self, letter: usize) -> DMatrix<f64> {
        let s = &self.switching;
        self.noise.v_cov(s.regime(letter)) * s.z_scale(letter)
    }

    /// `R_σ = E[z^u_σ (z^u_σ)ᵀ]`.
    pub fn r_letter(&self, letter: usize) -> DMatrix<f64> {
        let s = &self.switching;
        self.noise.u_cov(s.regime(letter)) * s.z_scale(letter)
    }

    /// Unconditional `E[v vᵀ]`.
    pub fn v_cov(&self) -> DMatrix<f64> {
        self.mix(|r| self.noise.v_cov(r))
    }

    /// Unconditional `E[u uᵀ]`.
    pub fn u_cov(&self) -> DMatrix<f64> {
        self.mix(|r| self.noise.u_cov(r))
    }

    fn mix(&self, cov: impl Fn(usize) -> DMatrix<f64>) -> DMatrix<f64> {
        match self.switching.stationary() {
            Some(mu) => (0..mu.len()).map(|r| cov(r) * mu[r]).fold(cov(0) * 0.0, |a, b| a + b),
            None => cov(0),
        }
    }

    pub fn stability_radius(&self) -> Result<f64> {
        words::stability_radius(&self.a_matrices(), self.weights())
    }

    /// Error unless the stability radius is below one.
    pub fn require_stable(&self) -> Result<f64> {
        let rho = self.stability_radius()?;
        if rho < 1.0 {
            Ok(rho)
        } else {
            Err(GlssError::Unstable { rho })
        }
    }

    /// Same model with new state coordinates `x' = T x`.
    pub fn transformed(&self, t: &DMatrix<f64>) -> Result<GlssModel> {
        let t_inv = t
            .clone()
            .try_inverse()
            .ok_or_else(|| GlssError::Input("basis change is singular".into()))?;
        let mut m = self.clone();
        for l in &mut m.letters {
            l.a = t * &l.a * &t_inv;
            l.b = t * &l.b;
            l.k = t * &l.k;
        }
        m.c = &self.c * &t_inv;
        Ok(m)
    }
}

/// Burn-in long enough for the mean-square distance to stationarity to fall
/// below 1e-8: `ceil(2 ln(1e-8) / ln ρ)`, capped at 10⁴.
pub fn default_burn_in(rho: f64) -> usize {
    if rho <= 0.0 {
        return 1;
    }
    if rho >= 1.0 {
        return 10_000;
    }
    let n = (2.0 * 1e-8f64.ln() / rho.ln()).ceil();
    (n as usize).clamp(1, 10_000)
}

/// Tolerance for the structural (exact-zero) checks.
const STRUCTURAL_TOL: f64 = 1e-10;

/// Checks the four conditions of a stationary GLSS.
pub fn validate_sglss(model: &GlssModel) -> ValidationReport {
    let mut report = ValidationReport::new("stationary GLSS");
    let p = model.letter_count();
    let s = &model.switching;

    let min_w = s.weights().iter().copied().fold(f64::INFINITY, f64::min);
    report.push(Check::above("weights positive", min_w, 0.0));

    // item 1: noise and input white with nonsingular letter moments
    for l in 0..p {
        let q = model.q_letter(l);
        let r = model.r_letter(l);
        for (name, m) in [("Q", q), ("R", r)] {
            if m.nrows() == 0 {
                continue;
            }
            report.push(
                Check::above(
                    format!("item1 {name}_{} positive definite", l + 1),
                    linalg::min_eigenvalue_sym(&m),
                    0.0,
                )
                .with_detail("minimum eigenvalue"),
            );
        }
    }

    // item 2: noise, input and switching are sampled from independent
    // streams, so the cross moments vanish structurally
    report.push(
        Check::at_most("item2 cross moments", 0.0, 0.0).with_detail("independent streams for v, u and switching"),
    );

    // item 3
    match model.stability_radius() {
        Ok(rho) => report.push(Check::below("item3 stability radius", rho, 1.0)),
        Err(e) => report.push(Check::below("item3 stability radius", f64::NAN, 1.0).with_detail(e.to_string())),
    }

    // item 4: products along non-edges vanish
    let alphabet = model.alphabet();
    let mut violations = Vec::new();
    let mut worst: f64 = 0.0;
    for s1 in 0..p {
        for s2 in 0..p {
            if alphabet.has_edge(s1, s2) {
                continue;
            }
            let a2 = &model.letters[s2].a;
            let l1 = &model.letters[s1];
            let aa = (a2 * &l1.a).norm();
            let ak = (a2 * &l1.k * model.q_letter(s1)).norm();
            let ab = (a2 * &l1.b * model.r_letter(s1)).norm();
            let v = aa.max(ak).max(ab);
            let scale = 1.0f64.max(a2.norm() * l1.a.norm());
            if v > STRUCTURAL_TOL * scale {
                violations.push(format!("({},{})", s1 + 1, s2 + 1));
            }
            worst = worst.max(v / scale);
        }
    }
    let mut item4 = Check::at_most("item4 non-edge products", worst, STRUCTURAL_TOL);
    if !violations.is_empty() {
        item4 = item4.with_detail(format!("violating pairs {}", violations.join(" ")));
    }
    report.push(item4);
    report
}

/// Stationary second moments.
#[derive(Clone, Debug)]
pub struct StationaryMoments {
    /// `G_σ`: contribution to `E[x(t) x(t)ᵀ]` of the paths whose letter at
    /// `t−1` is σ.
    pub incoming: Vec<DMatrix<f64>>,
    /// `P^z_σ = E[x(t) x(t)ᵀ π_σ²(t)] / p_σ`.
    pub letter: Vec<DMatrix<f64>>,
    /// `P = E[x(t) x(t)ᵀ]`.
    pub total: DMatrix<f64>,
    pub iterations: usize,
}

pub const GRAMIAN_MAX_ITER: usize = 100_000;
const DIVERGENCE_STREAK: usize = 10;

/// Per-letter Gramian fixed point restricted to the edge set.
pub fn solve_stationary_gramian(model: &GlssModel, tolerance: f64) -> Result<StationaryMoments> {
    model.require_stable()?;
    let p = model.letter_count();
    let forcing: Vec<DMatrix<f64>> = (0..p)
        .map(|l| {
            let m = &model.letters[l];
            let pl = model.weights()[l];
            (&m.k * model.q_letter(l) * m.k.transpose() + &m.b * model.r_letter(l) * m.b.transpose()) * pl
        })
        .collect();
    let (incoming, iterations) = letter_fixed_point(model, &forcing, tolerance)?;
    let alphabet = model.alphabet();
    let letter: Vec<DMatrix<f64>> = (0..p)
        .map(|s| {
            alphabet
                .predecessors(s)
                .fold(DMatrix::zeros(model.dims.nx, model.dims.nx), |acc, q| {
                    acc + &incoming[q]
                })
        })
        .collect();
    let total = incoming
        .iter()
        .fold(DMatrix::zeros(model.dims.nx, model.dims.nx), |acc, g| acc + g);
    Ok(StationaryMoments {
        incoming,
        letter,
        total,
        iterations,
    })
}

/// Iterates `G_τ ← p_τ A_τ (Σ_{(σ,τ)∈E} G_σ) A_τᵀ + forcing_τ` from zero
/// until the update falls below `tolerance · max(1, max_τ ‖G_τ‖)`.
pub(crate) fn letter_fixed_point(
    model: &GlssModel,
    forcing: &[DMatrix<f64>],
    tolerance: f64,
) -> Result<(Vec<DMatrix<f64>>, usize)> {
    let p = model.letter_count();
    let n = model.dims.nx;
    let alphabet = model.alphabet();
    let preds: Vec<Vec<usize>> = (0..p).map(|s| alphabet.predecessors(s).collect()).collect();
    let mut g: Vec<DMatrix<f64>> = vec![DMatrix::zeros(n, n); p];
    let mut last_change = f64::INFINITY;
    let mut growth = 0;
    for it in 1..=GRAMIAN_MAX_ITER {
        let next: Vec<DMatrix<f64>> = (0..p)
            .map(|t| {
                let a = &model.letters[t].a;
                let sum = preds[t].iter().fold(DMatrix::zeros(n, n), |acc, s| acc + &g[*s]);
                linalg::symmetrize(&(a * sum * a.transpose() * model.weights()[t] + &forcing[t]))
            })
            .collect();
        let change = next.iter().zip(&g).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max);
        g = next;
        if !change.is_finite() {
            return Err(GlssError::Convergence {
                iterations: it,
                residual: change,
            });
        }
        let scale = g.iter().map(|m| m.norm()).fold(1.0, f64::max);
        if change < tolerance * scale {
            return Ok((g, it));
        }
        growth = if change > last_change { growth + 1 } else { 0 };
        if growth >= DIVERGENCE_STREAK && it > 2 * DIVERGENCE_STREAK {
            return Err(GlssError::Convergence {
                iterations: it,
                residual: change,
            });
        }
        last_change = change;
    }
    Err(GlssError::Convergence {
        iterations: GRAMIAN_MAX_ITER,
        residual: last_change,
    })
}

/// Truncated stationary state series
/// `x(t) = Σ_{σw ∈ L, |σw| ≤ N} A_w (B_σ u + K_σ v)(t − |σw|) π_{σw}(t − 1)`.
///
/// Either signal may be omitted (treated as zero). Columns `t < N` are left
/// at zero; the series is defined from `t = N` on.
pub fn stationary_state_series(
    model: &GlssModel,
    pi: &DMatrix<f64>,
    u: Option<&DMatrix<f64>>,
    v: Option<&DMatrix<f64>>,
    depth: usize,
) -> Result<DMatrix<f64>> {
    let horizon = pi.ncols();
    if depth == 0 {
        return Err(GlssError::Input("depth must be at least 1".into()));
    }
    if depth >= horizon {
        return Err(GlssError::Window(format!(
            "depth {depth} needs a window longer than {horizon}"
        )));
    }
    let p = model.letter_count();
    if pi.nrows() != p {
        return Err(GlssError::dim(format!("π has {} rows, expected {p}", pi.nrows())));
    }
    let n = model.dims.nx;
    for (name, sig, dim) in [("u", u, model.dims.nu), ("v", v, model.dims.nn)] {
        if let Some(s) = sig {
            if s.nrows() != dim || s.ncols() < horizon {
                return Err(GlssError::dim(format!(
                    "{name} is {}x{}, expected {dim}x{horizon}",
                    s.nrows(),
                    s.ncols()
                )));
            }
        }
    }
    let alphabet = model.alphabet();
    let preds: Vec<Vec<usize>> = (0..p).map(|s| alphabet.predecessors(s).collect()).collect();
    // state[k][τ]: sum over admissible words of length k+1 ending in τ
    let mut state = vec![vec![DVector::<f64>::zeros(n); p]; depth];
    let mut next = state.clone();
    let mut out = DMatrix::zeros(n, horizon);
    for t in 0..horizon - 1 {
        for tau in 0..p {
            let w = pi[(tau, t)];
            let lm = &model.letters[tau];
            if w == 0.0 {
                for row in next.iter_mut() {
                    row[tau].fill(0.0);
                }
                continue;
            }
            let mut g = DVector::zeros(n);
            if let Some(u) = u {
                g += &lm.b * u.column(t);
            }
            if let Some(v) = v {
                g += &lm.k * v.column(t);
            }
            next[0][tau] = g * w;
            for k in 1..depth {
                let mut sum = DVector::zeros(n);
                for s in &preds[tau] {
                    sum += &state[k - 1][*s];
                }
                next[k][tau] = (&lm.a * sum) * w;
            }
        }
        std::mem::swap(&mut state, &mut next);
        if t + 1 >= depth {
            let mut col = out.column_mut(t + 1);
            for row in &state {
                for x in row {
                    col += x;
                }
            }
        }
    }
    Ok(out)
}
