//! Innovation process, one-step predictors and the innovation-form model.

use nalgebra::{DMatrix, DVector};

use crate::error::{GlssError, Result};
use crate::linalg;
use crate::model::{
    default_burn_in, letter_fixed_point, solve_stationary_gramian, GlssModel, LetterMatrices, NoiseLaw,
};
use crate::regress;
use crate::simulate::ZIndex;
use crate::stats::{self, CrossStats, SparseVec};
use crate::switching::SwitchingSpec;
use crate::words::{self, build_word_table, Word};

/// Innovation estimate `e^s = y^s − E_l[y^s | z^{y^s}_w, |w| ≤ N]`.
#[derive(Clone, Debug)]
pub struct InnovationEstimate {
    pub e: DMatrix<f64>,
    pub coef: DMatrix<f64>,
    /// `trace E[e eᵀ]` of the depth-k projection residual, `k = 0..=N`.
    pub residual_variance: Vec<f64>,
    pub valid_from: usize,
}

/// Projects `y_s` on its own z-past. `start` is the first sample at which
/// `y_s` is valid; the fit uses `t >= start + depth`.
pub fn estimate_innovation(
    y_s: &DMatrix<f64>,
    pi: &DMatrix<f64>,
    spec: &SwitchingSpec,
    depth: usize,
    ridge: Option<f64>,
    start: usize,
) -> Result<InnovationEstimate> {
    let horizon = pi.ncols();
    if y_s.ncols() != horizon {
        return Err(GlssError::dim("y_s and π must have the same length"));
    }
    let index = ZIndex::for_spec(spec, depth)?;
    let ny = y_s.nrows();
    let dx = index.len() * ny;
    let from = start + depth;
    if horizon < from || horizon - from < 10 * dx {
        return Err(GlssError::Window(format!(
            "{} usable samples, at least {} needed for {dx} regressors",
            horizon.saturating_sub(from),
            10 * dx
        )));
    }
    let range = from..horizon;
    let regressors = |t: usize, x: &mut SparseVec| {
        let mut mult = vec![0.0; index.len()];
        index.multipliers(pi, t, &mut mult);
        index.push_z(x, 0, &mult, y_s, t, false);
    };
    let sums = stats::normal_sums(range.clone(), dx, ny, |t, x, yt| {
        regressors(t, x);
        for (j, v) in y_s.column(t).iter().enumerate() {
            yt[j] = *v;
        }
    })?;
    let yy = range.clone().fold(DMatrix::zeros(ny, ny), |acc, t| {
        acc + y_s.column(t) * y_s.column(t).transpose()
    });
    let mut residual_variance = vec![yy.trace() / sums.count as f64];
    for k in 1..=depth {
        let cols = index.count_up_to(k) * ny;
        residual_variance.push(regress::residual_moment(&sums, &yy, cols, ridge)?.trace());
    }
    let fit = regress::solve(&sums, ridge)?;
    let fitted = regress::predict(horizon, range, &fit.coef, regressors);
    let mut e = y_s - fitted;
    for t in 0..from {
        e.column_mut(t).fill(0.0);
    }
    Ok(InnovationEstimate {
        e,
        coef: fit.coef,
        residual_variance,
        valid_from: from,
    })
}

/// One-step prediction `ŷ = E_l[y | u(t), z^u_w, z^y_w]` and its residual.
#[derive(Clone, Debug)]
pub struct Prediction {
    pub y_hat: DMatrix<f64>,
    pub residual: DMatrix<f64>,
    pub coef: DMatrix<f64>,
    pub valid_from: usize,
}

pub fn predictor_estimate(
    y: &DMatrix<f64>,
    u: &DMatrix<f64>,
    pi: &DMatrix<f64>,
    spec: &SwitchingSpec,
    depth: usize,
    ridge: Option<f64>,
) -> Result<Prediction> {
    let horizon = pi.ncols();
    if y.ncols() != horizon || u.ncols() != horizon {
        return Err(GlssError::dim("y, u and π must have the same length"));
    }
    let index = ZIndex::for_spec(spec, depth)?;
    let (ny, nu) = (y.nrows(), u.nrows());
    let du = (index.len() + 1) * nu;
    let dx = du + index.len() * ny;
    if horizon < depth || horizon - depth < 10 * dx {
        return Err(GlssError::Window(format!(
            "{} usable samples, at least {} needed for {dx} regressors",
            horizon.saturating_sub(depth),
            10 * dx
        )));
    }
    let range = depth..horizon;
    let regressors = |t: usize, x: &mut SparseVec| {
        let mut mult = vec![0.0; index.len()];
        index.multipliers(pi, t, &mut mult);
        index.push_z(x, 0, &mult, u, t, true);
        index.push_z(x, du, &mult, y, t, false);
    };
    let sums = stats::normal_sums(range.clone(), dx, ny, |t, x, yt| {
        regressors(t, x);
        for (j, v) in y.column(t).iter().enumerate() {
            yt[j] = *v;
        }
    })?;
    let fit = regress::solve(&sums, ridge)?;
    let y_hat = regress::predict(horizon, range, &fit.coef, regressors);
    let mut residual = y - &y_hat;
    for t in 0..depth {
        residual.column_mut(t).fill(0.0);
    }
    Ok(Prediction {
        y_hat,
        residual,
        coef: fit.coef,
        valid_from: depth,
    })
}

/// Innovation-form model with its construction data.
#[derive(Clone, Debug)]
pub struct InnovationForm {
    /// `({A_σ, B_σ, K̂_σ}, C, D, I)` driven by the innovation.
    pub model: GlssModel,
    pub gains: Vec<DMatrix<f64>>,
    /// `Λ_σ = E[e(t) e(t)ᵀ π_σ²(t)] / p_σ`.
    pub lambda: Vec<DMatrix<f64>>,
    /// Filter error Gramians `Π_σ`.
    pub error_gramians: Vec<DMatrix<f64>>,
    pub iterations: usize,
    /// Edge-restricted stability radius of `{A_σ − K̂_σ C}`.
    pub closed_loop_radius: f64,
}

pub const RICCATI_MAX_ITER: usize = 100_000;

/// Mode-indexed filter Riccati iteration
/// `Π_τ ← Σ_{(σ,τ)∈E} p_σ [A_σ Π_σ A_σᵀ + K_σ Q_σ K_σᵀ − K̂_σ Λ_σ K̂_σᵀ]`
/// started from the stochastic state Gramian, with
/// `Λ_σ = C Π_σ Cᵀ + F Q_σ Fᵀ` and `K̂_σ = (A_σ Π_σ Cᵀ + K_σ Q_σ Fᵀ) Λ_σ⁻¹`.
pub fn build_innovation_form(model: &GlssModel, tolerance: f64) -> Result<InnovationForm> {
    model.require_stable()?;
    let p = model.letter_count();
    let n = model.dims.nx;
    let ny = model.dims.ny;
    let q: Vec<DMatrix<f64>> = (0..p).map(|l| model.q_letter(l)).collect();
    let w = model.weights();
    let forcing: Vec<DMatrix<f64>> = (0..p)
        .map(|l| {
            let k = &model.letters[l].k;
            k * &q[l] * k.transpose() * w[l]
        })
        .collect();
    let (incoming, _) = letter_fixed_point(model, &forcing, tolerance)?;
    let alphabet = model.alphabet();
    let succ: Vec<Vec<usize>> = (0..p).map(|s| alphabet.successors(s).collect()).collect();
    let preds: Vec<Vec<usize>> = (0..p).map(|s| alphabet.predecessors(s).collect()).collect();
    let mut pi_g: Vec<DMatrix<f64>> = (0..p)
        .map(|s| preds[s].iter().fold(DMatrix::zeros(n, n), |acc, r| acc + &incoming[*r]))
        .collect();

    let gain = |pi_s: &DMatrix<f64>, s: usize| -> Result<(DMatrix<f64>, DMatrix<f64>)> {
        let l = &model.letters[s];
        let lam = linalg::symmetrize(&(&model.c * pi_s * model.c.transpose() + &model.f * &q[s] * model.f.transpose()));
        let chol = lam
            .clone()
            .cholesky()
            .ok_or_else(|| GlssError::Hypothesis(format!("innovation covariance of letter {} is singular", s + 1)))?;
        let cross = &l.a * pi_s * model.c.transpose() + &l.k * &q[s] * model.f.transpose();
        // K̂ = cross Λ⁻¹  ⇔  Λ K̂ᵀ = crossᵀ
        let kh = chol.solve(&cross.transpose()).transpose();
        Ok((kh, lam))
    };

    let mut iterations = 0;
    loop {
        iterations += 1;
        let mut next = vec![DMatrix::zeros(n, n); p];
        for s in 0..p {
            let l = &model.letters[s];
            let (kh, lam) = gain(&pi_g[s], s)?;
            let term = (&l.a * &pi_g[s] * l.a.transpose() + &l.k * &q[s] * l.k.transpose()
                - &kh * lam * kh.transpose())
                * w[s];
            for t in &succ[s] {
                next[*t] += &term;
            }
        }
        let next: Vec<DMatrix<f64>> = next.iter().map(linalg::symmetrize).collect();
        let change = next.iter().zip(&pi_g).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max);
        pi_g = next;
        if !change.is_finite() {
            return Err(GlssError::Convergence {
                iterations,
                residual: change,
            });
        }
        let scale = pi_g.iter().map(|m| m.norm()).fold(1.0, f64::max);
        if change < tolerance * scale {
            break;
        }
        if iterations >= RICCATI_MAX_ITER {
            return Err(GlssError::Convergence {
                iterations,
                residual: change,
            });
        }
    }

    let mut gains = Vec::with_capacity(p);
    let mut lambda = Vec::with_capacity(p);
    for (s, pi_s) in pi_g.iter().enumerate() {
        let (kh, lam) = gain(pi_s, s)?;
        gains.push(kh);
        lambda.push(lam);
    }

    let spec = &model.switching;
    let regimes = spec.regime_count();
    let mut e_factors = Vec::with_capacity(regimes);
    for r in 0..regimes {
        let s = (0..p)
            .find(|s| spec.regime(*s) == r)
            .ok_or_else(|| GlssError::InvalidSwitching(format!("regime {} has no letter", r + 1)))?;
        e_factors.push(linalg::psd_sqrt(&(&lambda[s] / spec.z_scale(s))));
    }

    let letters: Vec<LetterMatrices> = model
        .letters
        .iter()
        .zip(&gains)
        .map(|(l, kh)| LetterMatrices {
            a: l.a.clone(),
            b: l.b.clone(),
            k: kh.clone(),
        })
        .collect();
    let mut inn = GlssModel::new(
        letters,
        model.c.clone(),
        model.d.clone(),
        DMatrix::identity(ny, ny),
        spec.clone(),
        NoiseLaw {
            v_factors: e_factors,
            u_factors: model.noise.u_factors.clone(),
        },
    )?;
    inn.innovation = true;
    let closed: Vec<DMatrix<f64>> = model
        .letters
        .iter()
        .zip(&gains)
        .map(|(l, kh)| &l.a - kh * &model.c)
        .collect();
    let closed_loop_radius = words::edge_stability_radius(model.alphabet(), &closed, w)?;
    Ok(InnovationForm {
        model: inn,
        gains,
        lambda,
        error_gramians: pi_g,
        iterations,
        closed_loop_radius,
    })
}

/// Innovation form assembled from a deterministic part `(A^d, B^d, C^d, D)`
/// and a stochastic innovation form `(A^s, K^s, C^s, I)` with separate
/// state bases.
pub fn block_assembly(det: &GlssModel, stoch: &GlssModel) -> Result<GlssModel> {
    if det.letter_count() != stoch.letter_count() || det.dims.ny != stoch.dims.ny {
        return Err(GlssError::dim("deterministic and stochastic parts do not match"));
    }
    let (nd, ns) = (det.dims.nx, stoch.dims.nx);
    let (nu, ny) = (det.dims.nu, det.dims.ny);
    let letters = det
        .letters
        .iter()
        .zip(&stoch.letters)
        .map(|(d, s)| LetterMatrices {
            a: linalg::block_diag(&d.a, &s.a),
            b: linalg::vstack(&[d.b.clone(), DMatrix::zeros(ns, nu)]),
            k: linalg::vstack(&[DMatrix::zeros(nd, stoch.dims.nn), s.k.clone()]),
        })
        .collect();
    let mut m = GlssModel::new(
        letters,
        linalg::hstack(&[det.c.clone(), stoch.c.clone()]),
        det.d.clone(),
        DMatrix::identity(ny, ny),
        det.switching.clone(),
        NoiseLaw {
            v_factors: stoch.noise.v_factors.clone(),
            u_factors: det.noise.u_factors.clone(),
        },
    )?;
    m.innovation = true;
    Ok(m)
}

#[derive(Clone, Debug)]
pub struct FilterOutput {
    pub x_hat: DMatrix<f64>,
    pub y_hat: DMatrix<f64>,
    pub e: DMatrix<f64>,
}

/// Recursive predictor of an innovation-form model:
/// `x̂(t+1) = Σ_σ (A_σ x̂ + B_σ u + K_σ (y − C x̂ − D u)) π_σ(t)`.
pub fn run_predictor_filter(
    inn: &GlssModel,
    y: &DMatrix<f64>,
    u: &DMatrix<f64>,
    pi: &DMatrix<f64>,
    x0: Option<&DVector<f64>>,
) -> Result<FilterOutput> {
    let horizon = pi.ncols();
    let dims = inn.dims;
    if dims.nn != dims.ny
        || y.shape() != (dims.ny, horizon)
        || u.shape() != (dims.nu, horizon)
        || pi.nrows() != inn.letter_count()
    {
        return Err(GlssError::dim("filter signals do not match the innovation model"));
    }
    let mut state = match x0 {
        Some(x) if x.len() == dims.nx => x.clone(),
        Some(_) => return Err(GlssError::dim("initial state has the wrong length")),
        None => DVector::zeros(dims.nx),
    };
    let mut x_hat = DMatrix::zeros(dims.nx, horizon);
    let mut y_hat = DMatrix::zeros(dims.ny, horizon);
    let mut e = DMatrix::zeros(dims.ny, horizon);
    for t in 0..horizon {
        x_hat.set_column(t, &state);
        let ut = u.column(t);
        let yh = &inn.c * &state + &inn.d * ut;
        let et = y.column(t) - &yh;
        let mut next = DVector::zeros(dims.nx);
        for (s, l) in inn.letters.iter().enumerate() {
            let w = pi[(s, t)];
            if w != 0.0 {
                next += (&l.a * &state + &l.b * ut + &l.k * &et) * w;
            }
        }
        y_hat.set_column(t, &yh);
        e.set_column(t, &et);
        state = next;
    }
    Ok(FilterOutput { x_hat, y_hat, e })
}

/// Data-driven gains: with the innovation `e` known, the stochastic filter
/// state is linear in the gains, `x̂_s(t) = Σ_σ J_σ(t) vec(K̂_σ)` with
/// `J_σ(t+1) = M(t) J_σ(t) + π_σ(t) (e(t)ᵀ ⊗ I)`, so `y_s − e = C x̂_s` is a
/// least-squares problem in the gains. Samples before `start` plus a
/// burn-in are discarded.
pub fn fit_innovation_gains(
    model: &GlssModel,
    y_s: &DMatrix<f64>,
    e: &DMatrix<f64>,
    pi: &DMatrix<f64>,
    start: usize,
) -> Result<Vec<DMatrix<f64>>> {
    let p = model.letter_count();
    let (n, ny) = (model.dims.nx, model.dims.ny);
    let horizon = pi.ncols();
    let burn = default_burn_in(model.require_stable()?).min(1_000);
    let per = n * ny;
    let dim = p * per;
    if horizon < start + burn + 10 * dim {
        return Err(GlssError::Window("too few samples for the gain fit".into()));
    }
    let mut j: Vec<DMatrix<f64>> = vec![DMatrix::zeros(n, per); p];
    let mut gram = DMatrix::zeros(dim, dim);
    let mut rhs = DVector::zeros(dim);
    let mut phi = DMatrix::zeros(ny, dim);
    for t in start..horizon {
        if t >= start + burn {
            for (s, js) in j.iter().enumerate() {
                phi.columns_mut(s * per, per).copy_from(&(&model.c * js));
            }
            let target = y_s.column(t) - e.column(t);
            gram += phi.transpose() * &phi;
            rhs += phi.transpose() * target;
        }
        let mut m = DMatrix::zeros(n, n);
        for (s, l) in model.letters.iter().enumerate() {
            let w = pi[(s, t)];
            if w != 0.0 {
                m += &l.a * w;
            }
        }
        for (s, js) in j.iter_mut().enumerate() {
            let mut next = &m * &*js;
            let w = pi[(s, t)];
            if w != 0.0 {
                // (eᵀ ⊗ I_n): column block c scaled by e_c
                for c in 0..ny {
                    let ec = e[(c, t)] * w;
                    for r in 0..n {
                        next[(r, c * n + r)] += ec;
                    }
                }
            }
            *js = next;
        }
    }
    let theta = gram
        .cholesky()
        .ok_or(GlssError::SingularRegression { dim })?
        .solve(&rhs);
    Ok((0..p)
        .map(|s| DMatrix::from_column_slice(n, ny, theta.rows(s * per, per).as_slice()))
        .collect())
}

/// Model-implied output covariances, `ε` first:
/// `E[y yᵀ]` and `E[y(t) z^y_{σw}(t)ᵀ] = sqrt(p_{σw}) C A_w Γ_σ` with
/// `Γ_σ = A_σ P^z_σ Cᵀ + B_σ R_σ Dᵀ + K_σ Q_σ Fᵀ`.
pub fn output_covariances(model: &GlssModel, depth: usize, tolerance: f64) -> Result<Vec<(Word, DMatrix<f64>)>> {
    let mom = solve_stationary_gramian(model, tolerance)?;
    let p = model.letter_count();
    let gamma: Vec<DMatrix<f64>> = (0..p)
        .map(|s| {
            let l = &model.letters[s];
            &l.a * &mom.letter[s] * model.c.transpose()
                + &l.b * model.r_letter(s) * model.d.transpose()
                + &l.k * model.q_letter(s) * model.f.transpose()
        })
        .collect();
    let table = build_word_table(model.alphabet(), &model.a_matrices(), model.weights(), depth)?;
    let eps = &model.c * &mom.total * model.c.transpose()
        + &model.d * model.u_cov() * model.d.transpose()
        + &model.f * model.v_cov() * model.f.transpose();
    let mut out = vec![(Word::empty(), eps)];
    for entry in table.entries().iter().skip(1) {
        let w = &entry.word;
        let tail = table.get(&w.tail()).expect("suffix of an admissible word");
        let s = w.first().expect("non-empty");
        out.push((w.clone(), &model.c * &tail.product * &gamma[s] * entry.weight.sqrt()));
    }
    Ok(out)
}

/// Empirical `E[y(t) yᵀ(t)]` and `E[y(t) z^y_w(t)ᵀ]` as one
/// `ny × (1 + |L|)·ny` block row.
pub fn empirical_output_covariances(
    y: &DMatrix<f64>,
    pi: &DMatrix<f64>,
    spec: &SwitchingSpec,
    depth: usize,
) -> Result<CrossStats> {
    let index = ZIndex::for_spec(spec, depth)?;
    let ny = y.nrows();
    let horizon = pi.ncols();
    if horizon <= depth {
        return Err(GlssError::Window("trajectory shorter than depth".into()));
    }
    stats::cross_stats(depth..horizon, ny, (index.len() + 1) * ny, |t, a, b| {
        let mut mult = vec![0.0; index.len()];
        index.multipliers(pi, t, &mut mult);
        a.extend(y.column(t).iter().copied().enumerate());
        index.push_z(b, 0, &mult, y, t, true);
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::NoiseLaw;
    use crate::simulate::{propagate, simulate, Seeds};
    use approx::assert_relative_eq;

    fn two_mode(k_scale: f64) -> GlssModel {
        GlssModel::new(
            vec![
                LetterMatrices {
                    a: DMatrix::from_row_slice(2, 2, &[0.4, 0.2, -0.1, 0.3]),
                    b: DMatrix::from_row_slice(2, 1, &[1.0, 0.0]),
                    k: DMatrix::from_row_slice(2, 1, &[0.5, 1.0]) * k_scale,
                },
                LetterMatrices {
                    a: DMatrix::from_row_slice(2, 2, &[-0.3, 0.0, 0.2, 0.5]),
                    b: DMatrix::from_row_slice(2, 1, &[0.0, 1.0]),
                    k: DMatrix::from_row_slice(2, 1, &[1.0, -0.5]) * k_scale,
                },
            ],
            DMatrix::from_row_slice(1, 2, &[1.0, 0.5]),
            DMatrix::from_element(1, 1, 0.3),
            DMatrix::from_element(1, 1, 1.0),
            SwitchingSpec::discrete_iid(vec![0.4, 0.6]).unwrap(),
            NoiseLaw::constant(DMatrix::identity(1, 1), DMatrix::identity(1, 1)),
        )
        .unwrap()
    }

    #[test]
    fn zero_noise_gain_gives_zero_innovation_gain() {
        let m = two_mode(0.0);
        let inn = build_innovation_form(&m, 1e-12).unwrap();
        for g in &inn.gains {
            assert!(g.amax() < 1e-12);
        }
        // Λ = F Q Fᵀ = 1
        assert_relative_eq!(inn.lambda[0][(0, 0)], 1.0, epsilon = 1e-12);
    }

    #[test]
    fn innovation_form_preserves_output_covariances() {
        let m = two_mode(1.0);
        let inn = build_innovation_form(&m, 1e-13).unwrap();
        assert!(inn.closed_loop_radius < 1.0);
        let a = output_covariances(&m, 4, 1e-14).unwrap();
        let b = output_covariances(&inn.model, 4, 1e-14).unwrap();
        for ((w1, c1), (w2, c2)) in a.iter().zip(&b) {
            assert_eq!(w1, w2);
            assert_relative_eq!(c1, c2, epsilon = 1e-9);
        }
    }

    #[test]
    fn filter_recovers_innovations_exactly() {
        let m = two_mode(1.0);
        let inn = build_innovation_form(&m, 1e-12).unwrap().model;
        let tr = simulate(&inn, 300, Some(20), Seeds::default()).unwrap();
        let x0 = tr.x.column(0).into_owned();
        let out = run_predictor_filter(&inn, &tr.y, &tr.u, &tr.pi, Some(&x0)).unwrap();
        assert_relative_eq!(out.e, tr.v, epsilon = 1e-10);
        assert_relative_eq!(out.x_hat, tr.x, epsilon = 1e-10);
    }

    #[test]
    fn filter_forgets_wrong_initial_state() {
        let m = two_mode(1.0);
        let form = build_innovation_form(&m, 1e-12).unwrap();
        let inn = form.model;
        let tr = simulate(&inn, 200, Some(20), Seeds::default()).unwrap();
        let wrong = DVector::from_vec(vec![20.0, 20.0]);
        let out = run_predictor_filter(&inn, &tr.y, &tr.u, &tr.pi, Some(&wrong)).unwrap();
        let early = (out.e.column(0) - tr.v.column(0)).norm();
        let late = (out.e.column(150) - tr.v.column(150)).norm();
        assert!(early > 1.0);
        assert!(late < 1e-6 * early, "late {late}");
    }

    #[test]
    fn white_noise_has_nothing_to_predict() {
        let m = two_mode(0.0);
        let tr = simulate(&m, 40_000, None, Seeds::default()).unwrap();
        let ys = &m.f * &tr.v;
        let est = estimate_innovation(&ys, &tr.pi, &m.switching, 2, None, 0).unwrap();
        let bound = 5.0 / (40_000f64).sqrt();
        assert!(est.coef.amax() < bound, "{}", est.coef);
        assert_eq!(est.residual_variance.len(), 3);
    }

    #[test]
    fn memoryless_predictor_is_feedthrough() {
        let mut m = two_mode(0.0);
        for l in &mut m.letters {
            l.a.fill(0.0);
            l.b.fill(0.0);
        }
        let tr = simulate(&m, 20_000, Some(5), Seeds::default()).unwrap();
        let pred = predictor_estimate(&tr.y, &tr.u, &tr.pi, &m.switching, 2, None).unwrap();
        let diff = &pred.residual - &m.f * &tr.v;
        let r = stats::rms(&diff, 2..20_000);
        assert!(r < 0.05, "{r}");
        assert_relative_eq!(pred.coef[(0, 0)], 0.3, epsilon = 0.02);
    }

    #[test]
    fn block_assembly_shapes() {
        let m = two_mode(1.0);
        let inn = build_innovation_form(&m, 1e-12).unwrap().model;
        let asm = block_assembly(&m, &inn).unwrap();
        assert_eq!(asm.dims.nx, 4);
        assert_eq!(asm.letters[0].b.rows(2, 2).amax(), 0.0);
        assert_eq!(asm.letters[0].k.rows(0, 2).amax(), 0.0);
        // deterministic and stochastic states evolve separately, so the
        // assembled output is the sum of the two parts' outputs
        let tr = simulate(&asm, 100, Some(5), Seeds::default()).unwrap();
        let zero_v = DMatrix::zeros(1, 100);
        let zero_u = DMatrix::zeros(1, 100);
        let x0 = DVector::zeros(2);
        let (_, yd) = propagate(&m, &tr.pi, &tr.u, &zero_v, &x0).unwrap();
        let (_, ys) = propagate(&inn, &tr.pi, &zero_u, &tr.v, &x0).unwrap();
        let (_, ya) = propagate(&asm, &tr.pi, &tr.u, &tr.v, &DVector::zeros(4)).unwrap();
        assert_relative_eq!(ya, yd + ys, epsilon = 1e-12);
    }
}
