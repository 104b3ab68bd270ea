//! Minimality rank checks and isomorphism recovery between innovation forms.

use nalgebra::DMatrix;
use serde::Serialize;

use crate::error::{GlssError, Result};
use crate::linalg;
use crate::model::{GlssModel, LetterMatrices};
use crate::words::build_word_table;

pub const DEFAULT_RANK_TOL: f64 = 1e-8;

#[derive(Clone, Debug, Serialize)]
pub struct RankReport {
    pub nx: usize,
    pub depth: usize,
    #[serde(skip)]
    pub observability: DMatrix<f64>,
    #[serde(skip)]
    pub reachability: DMatrix<f64>,
    pub observability_singular_values: Vec<f64>,
    pub reachability_singular_values: Vec<f64>,
    pub observability_rank: usize,
    pub reachability_rank: usize,
    pub minimal: bool,
}

/// Rows `sqrt(p_w) C A_w` for `w ∈ {ε} ∪ L`, `|w| ≤ depth`.
pub fn observability_matrix(model: &GlssModel, depth: usize) -> Result<DMatrix<f64>> {
    if depth == 0 {
        return Ok(model.c.clone());
    }
    let table = build_word_table(model.alphabet(), &model.a_matrices(), model.weights(), depth)?;
    let blocks: Vec<DMatrix<f64>> = table
        .entries()
        .iter()
        .map(|e| &model.c * &e.product * e.weight.sqrt())
        .collect();
    Ok(linalg::vstack(&blocks))
}

/// Columns `sqrt(p_{σw}) A_w [K_σ Q_σ^{1/2}, B_σ R_σ^{1/2}]` for admissible
/// `σw`, `|σw| ≤ depth + 1`.
pub fn reachability_matrix(model: &GlssModel, depth: usize) -> Result<DMatrix<f64>> {
    let table = build_word_table(model.alphabet(), &model.a_matrices(), model.weights(), depth + 1)?;
    let generators: Vec<DMatrix<f64>> = (0..model.letter_count())
        .map(|s| {
            let l = &model.letters[s];
            linalg::hstack(&[
                &l.k * linalg::psd_sqrt(&model.q_letter(s)),
                &l.b * linalg::psd_sqrt(&model.r_letter(s)),
            ])
        })
        .collect();
    let blocks: Vec<DMatrix<f64>> = table
        .entries()
        .iter()
        .skip(1)
        .map(|e| {
            let s = e.word.first().expect("non-empty word");
            let tail = table.get(&e.word.tail()).expect("suffix of an admissible word");
            &tail.product * &generators[s] * e.weight.sqrt()
        })
        .collect();
    Ok(linalg::hstack(&blocks))
}

/// Observability and reachability ranks at word depth `n_x − 1`.
pub fn check_minimality(model: &GlssModel, rank_tol: f64) -> Result<RankReport> {
    check_minimality_at(model, model.dims.nx.saturating_sub(1), rank_tol)
}

pub fn check_minimality_at(model: &GlssModel, depth: usize, rank_tol: f64) -> Result<RankReport> {
    let nx = model.dims.nx;
    let observability = observability_matrix(model, depth)?;
    let reachability = reachability_matrix(model, depth)?;
    let osv = linalg::singular_values(&observability);
    let rsv = linalg::singular_values(&reachability);
    let observability_rank = linalg::numerical_rank(&osv, rank_tol);
    let reachability_rank = linalg::numerical_rank(&rsv, rank_tol);
    Ok(RankReport {
        nx,
        depth,
        observability,
        reachability,
        observability_singular_values: osv,
        reachability_singular_values: rsv,
        observability_rank,
        reachability_rank,
        minimal: observability_rank == nx && reachability_rank == nx,
    })
}

/// Outcome of matching `Ŝ` against `S`: `x̂ = T x`.
#[derive(Clone, Debug, Serialize)]
pub struct Isomorphism {
    pub found: bool,
    pub t: Option<DMatrix<f64>>,
    pub condition_number: f64,
    /// `max_σ ‖T A_σ T⁻¹ − Â_σ‖`, relative to `max(1, ‖Â_σ‖)`.
    pub residual_a: f64,
    /// `max_σ ‖T [K_σ, B_σ] − [K̂_σ, B̂_σ]‖`, relative.
    pub residual_kb: f64,
    /// `‖C T⁻¹ − Ĉ‖`, relative.
    pub residual_c: f64,
    /// `‖Ô T − O‖`, relative.
    pub residual_observability: f64,
    pub tolerance: f64,
}

impl Isomorphism {
    pub fn max_residual(&self) -> f64 {
        self.residual_a
            .max(self.residual_kb)
            .max(self.residual_c)
            .max(self.residual_observability)
    }
}

const COND_LIMIT: f64 = 1e12;

fn relative(diff: f64, reference: f64) -> f64 {
    diff / reference.max(1.0)
}

/// Recovers `T` from `Ô T = O` and evaluates the three constraint
/// families. Violated hypotheses are errors; a residual above `tolerance`
/// is reported as `found = false`.
pub fn find_isomorphism(s: &GlssModel, s_hat: &GlssModel, tolerance: f64) -> Result<Isomorphism> {
    if s.dims != s_hat.dims || s.letter_count() != s_hat.letter_count() {
        return Err(GlssError::dim("models have different dimensions"));
    }
    if s.alphabet() != s_hat.alphabet() {
        return Err(GlssError::Hypothesis(
            "models have different switching languages".into(),
        ));
    }
    for (name, m) in [("first", s), ("second", s_hat)] {
        let r = check_minimality(m, DEFAULT_RANK_TOL)?;
        if !r.minimal {
            return Err(GlssError::Hypothesis(format!(
                "{name} model is not minimal (observability rank {}, reachability rank {}, n_x = {})",
                r.observability_rank, r.reachability_rank, r.nx
            )));
        }
        for l in 0..m.letter_count() {
            if m.q_letter(l).cholesky().is_none() {
                return Err(GlssError::Hypothesis(format!(
                    "{name} model has a singular noise covariance for letter {}",
                    l + 1
                )));
            }
        }
    }
    let d_gap = (&s.d - &s_hat.d).norm();
    if d_gap > tolerance * s.d.norm().max(1.0) {
        return Err(GlssError::Hypothesis(format!(
            "feedthrough matrices differ by {d_gap:.3e}"
        )));
    }
    for (l, (a, b)) in s.letters.iter().zip(&s_hat.letters).enumerate() {
        let k = linalg::vstack(&[a.k.clone(), b.k.clone()]);
        let kb = linalg::hstack(&[k.clone(), linalg::vstack(&[a.b.clone(), b.b.clone()])]);
        let rk = linalg::numerical_rank(&linalg::singular_values(&k), DEFAULT_RANK_TOL);
        let rkb = linalg::numerical_rank(&linalg::singular_values(&kb), DEFAULT_RANK_TOL);
        if rkb > rk {
            return Err(GlssError::Hypothesis(format!(
                "letter {}: image of [B; B̂] is not contained in the image of [K; K̂]",
                l + 1
            )));
        }
    }

    let depth = s.dims.nx.saturating_sub(1);
    let o = observability_matrix(s, depth)?;
    let o_hat = observability_matrix(s_hat, depth)?;
    let not_found = |cond: f64| Isomorphism {
        found: false,
        t: None,
        condition_number: cond,
        residual_a: f64::INFINITY,
        residual_kb: f64::INFINITY,
        residual_c: f64::INFINITY,
        residual_observability: f64::INFINITY,
        tolerance,
    };
    let Some(t) = linalg::lstsq(&o_hat, &o) else {
        return Ok(not_found(f64::INFINITY));
    };
    let condition_number = linalg::condition_number(&t);
    let Some(t_inv) = t.clone().try_inverse().filter(|_| condition_number < COND_LIMIT) else {
        return Ok(not_found(condition_number));
    };
    let residual_observability = relative((&o_hat * &t - &o).norm(), o.norm());
    let mut residual_a: f64 = 0.0;
    let mut residual_kb: f64 = 0.0;
    for (a, b) in s.letters.iter().zip(&s_hat.letters) {
        residual_a = residual_a.max(relative((&t * &a.a * &t_inv - &b.a).norm(), b.a.norm()));
        let kb = linalg::hstack(&[a.k.clone(), a.b.clone()]);
        let kb_hat = linalg::hstack(&[b.k.clone(), b.b.clone()]);
        residual_kb = residual_kb.max(relative((&t * kb - &kb_hat).norm(), kb_hat.norm()));
    }
    let residual_c = relative((&s.c * &t_inv - &s_hat.c).norm(), s_hat.c.norm());
    let mut iso = Isomorphism {
        found: false,
        t: Some(t),
        condition_number,
        residual_a,
        residual_kb,
        residual_c,
        residual_observability,
        tolerance,
    };
    iso.found = iso.max_residual() <= tolerance;
    Ok(iso)
}

/// Non-minimal double of a model: `blockdiag(A, A)`, `[K; K]`, `[B; B]`,
/// `[C/2, C/2]`. Its outputs coincide with the original's.
pub fn duplicate(model: &GlssModel) -> Result<GlssModel> {
    let letters = model
        .letters
        .iter()
        .map(|l| LetterMatrices {
            a: linalg::block_diag(&l.a, &l.a),
            b: linalg::vstack(&[l.b.clone(), l.b.clone()]),
            k: linalg::vstack(&[l.k.clone(), l.k.clone()]),
        })
        .collect();
    let half = &model.c * 0.5;
    let mut m = GlssModel::new(
        letters,
        linalg::hstack(&[half.clone(), half]),
        model.d.clone(),
        model.f.clone(),
        model.switching.clone(),
        model.noise.clone(),
    )?;
    m.innovation = model.innovation;
    Ok(m)
}
