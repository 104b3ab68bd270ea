//! Admissible switching processes: construction, sampling and empirical
//! validation of the admissibility identities.

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{GlssError, Result};
use crate::report::{Check, ValidationReport};
use crate::stats;
use crate::words::{admissible_words, all_words, Alphabet, Letter, Word};

/// Component law of the zero-mean letters of an i.i.d. white switching
/// process.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum WhiteLaw {
    Rademacher,
    Gaussian,
}

impl WhiteLaw {
    pub fn name(self) -> &'static str {
        match self {
            WhiteLaw::Rademacher => "rademacher",
            WhiteLaw::Gaussian => "gaussian",
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum SwitchingKind {
    /// `π_1 ≡ 1`, `π_σ = sqrt(m_σ) ξ_σ` for σ ≥ 2 with unit-variance ξ.
    IidWhite { second_moments: Vec<f64>, law: WhiteLaw },
    /// `π_σ(t) = χ(θ(t) = σ)` with θ i.i.d.
    DiscreteIid { probabilities: Vec<f64> },
    /// Letters `(q2, q1)`, `π_(q2,q1)(t) = χ(θ(t+1) = q2, θ(t) = q1)`.
    Markov {
        states: usize,
        transition: DMatrix<f64>,
        stationary: DVector<f64>,
    },
}

/// Alphabet, weights `p_σ`, coefficients `α_σ` and a sampler recipe.
#[derive(Clone, Debug, PartialEq)]
pub struct SwitchingSpec {
    alphabet: Alphabet,
    kind: SwitchingKind,
    weights: Vec<f64>,
    alpha: Vec<f64>,
}

const ROW_SUM_TOL: f64 = 1e-12;
const PERRON_TOL: f64 = 1e-12;
/// Absolute slack for statistics that vanish identically, such as
/// `π_σ² − m_σ` under Rademacher letters, where the standard error is zero.
const ROUNDING_FLOOR: f64 = 1e-12;

impl SwitchingSpec {
    /// i.i.d. white switching. `second_moments[0]` must be 1 (`π_1 ≡ 1`).
    pub fn iid_white(second_moments: Vec<f64>, law: WhiteLaw) -> Result<Self> {
        let p = second_moments.len();
        if p == 0 {
            return Err(GlssError::InvalidSwitching("empty alphabet".into()));
        }
        if second_moments[0] != 1.0 {
            return Err(GlssError::InvalidSwitching(
                "the first letter of an iid-white process is the constant 1, its second moment must be 1".into(),
            ));
        }
        if let Some(i) = second_moments.iter().position(|m| !(*m > 0.0 && m.is_finite())) {
            return Err(GlssError::InvalidSwitching(format!(
                "second moment of letter {} must be positive",
                i + 1
            )));
        }
        let mut alpha = vec![0.0; p];
        alpha[0] = 1.0;
        Ok(SwitchingSpec {
            alphabet: Alphabet::full(p)?,
            weights: second_moments.clone(),
            kind: SwitchingKind::IidWhite { second_moments, law },
            alpha,
        })
    }

    /// Discrete i.i.d. switching among `probabilities.len()` letters. Zero
    /// probabilities are allowed for sampling; a model built on them fails
    /// validation.
    pub fn discrete_iid(probabilities: Vec<f64>) -> Result<Self> {
        let p = probabilities.len();
        if p == 0 {
            return Err(GlssError::InvalidSwitching("empty alphabet".into()));
        }
        if probabilities.iter().any(|q| !(*q >= 0.0 && q.is_finite())) {
            return Err(GlssError::InvalidSwitching("probabilities must be nonnegative".into()));
        }
        let total: f64 = probabilities.iter().sum();
        if (total - 1.0).abs() > ROW_SUM_TOL {
            return Err(GlssError::InvalidSwitching(format!(
                "probabilities sum to {total}, expected 1"
            )));
        }
        Ok(SwitchingSpec {
            alphabet: Alphabet::full(p)?,
            weights: probabilities.clone(),
            kind: SwitchingKind::DiscreteIid { probabilities },
            alpha: vec![1.0; p],
        })
    }

    /// Markov-embedded switching over `states` chain states.
    pub fn markov(states: usize, transition: DMatrix<f64>) -> Result<Self> {
        make_markov_spec(states, transition)
    }

    pub fn alphabet(&self) -> &Alphabet {
        &self.alphabet
    }

    pub fn kind(&self) -> &SwitchingKind {
        &self.kind
    }

    pub fn kind_name(&self) -> &'static str {
        match self.kind {
            SwitchingKind::IidWhite { .. } => "iid-white",
            SwitchingKind::DiscreteIid { .. } => "discrete-iid",
            SwitchingKind::Markov { .. } => "markov-embedded",
        }
    }

    pub fn size(&self) -> usize {
        self.alphabet.size()
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn alpha(&self) -> &[f64] {
        &self.alpha
    }

    /// `true` for the kinds whose letters are 0/1 indicators.
    pub fn is_indicator(&self) -> bool {
        !matches!(self.kind, SwitchingKind::IidWhite { .. })
    }

    /// Number of distinct regimes the noise law may depend on: the chain
    /// states for Markov switching, one otherwise.
    pub fn regime_count(&self) -> usize {
        match &self.kind {
            SwitchingKind::Markov { states, .. } => *states,
            _ => 1,
        }
    }

    /// Regime active at time t when σ is the active letter at t (the source
    /// state `q1` of a Markov letter `(q2, q1)`).
    pub fn regime(&self, letter: Letter) -> usize {
        match &self.kind {
            SwitchingKind::Markov { states, .. } => letter / states,
            _ => 0,
        }
    }

    /// `E[π_σ²(t)] / p_σ`: the factor by which the letter-σ second moment of
    /// a process that is white with conditional covariance Σ (given the
    /// regime) exceeds Σ. One for the i.i.d. kinds, the stationary
    /// probability of the source state for Markov letters.
    pub fn z_scale(&self, letter: Letter) -> f64 {
        match &self.kind {
            SwitchingKind::Markov { stationary, .. } => stationary[self.regime(letter)],
            _ => 1.0,
        }
    }

    /// Regime of one sampled column of π.
    pub fn regime_of_column(&self, column: &[f64]) -> usize {
        match &self.kind {
            SwitchingKind::Markov { .. } => column.iter().position(|v| *v != 0.0).map_or(0, |l| self.regime(l)),
            _ => 0,
        }
    }

    /// Stationary probability of the chain state for Markov, `None`
    /// otherwise.
    pub fn stationary(&self) -> Option<&DVector<f64>> {
        match &self.kind {
            SwitchingKind::Markov { stationary, .. } => Some(stationary),
            _ => None,
        }
    }

    /// Expected value of `π_w(t)` for admissible `w`. For the iid-white kind
    /// only words made of letter 1 have nonzero mean.
    pub fn expected_product(&self, w: &Word) -> f64 {
        if w.is_empty() {
            return 1.0;
        }
        match &self.kind {
            SwitchingKind::IidWhite { .. } => {
                if w.letters().iter().all(|l| *l == 0) {
                    1.0
                } else {
                    0.0
                }
            }
            SwitchingKind::DiscreteIid { probabilities } => w.letters().iter().map(|l| probabilities[*l]).product(),
            SwitchingKind::Markov { stationary, .. } => {
                if !self.alphabet.is_admissible(w) {
                    return 0.0;
                }
                let src = self.regime(w.first().expect("non-empty"));
                stationary[src] * w.letters().iter().map(|l| self.weights[*l]).product::<f64>()
            }
        }
    }
}

/// Markov-embedded spec with letters `(q2, q1)` at index `q1·|Θ| + q2`, so the
/// order is `(1,1), (2,1), (1,2), (2,2)` for two states.
pub fn make_markov_spec(states: usize, transition: DMatrix<f64>) -> Result<SwitchingSpec> {
    if states == 0 {
        return Err(GlssError::InvalidTransition("no states".into()));
    }
    if transition.shape() != (states, states) {
        return Err(GlssError::InvalidTransition(format!(
            "transition matrix is {}x{}, expected {states}x{states}",
            transition.nrows(),
            transition.ncols()
        )));
    }
    for (i, row) in transition.row_iter().enumerate() {
        if let Some(j) = row.iter().position(|v| !(*v > 0.0 && v.is_finite())) {
            return Err(GlssError::InvalidTransition(format!(
                "entry ({}, {}) must be positive",
                i + 1,
                j + 1
            )));
        }
        let s = row.sum();
        if (s - 1.0).abs() > ROW_SUM_TOL {
            return Err(GlssError::InvalidTransition(format!("row {} sums to {s}", i + 1)));
        }
    }
    let stationary = perron_vector(&transition)?;
    let p = states * states;
    let mut weights = vec![0.0; p];
    for q1 in 0..states {
        for q2 in 0..states {
            weights[q1 * states + q2] = transition[(q1, q2)];
        }
    }
    let edges = (0..p)
        .flat_map(|a| (0..p).map(move |b| (a, b)))
        .filter(|(a, b)| a % states == b / states);
    Ok(SwitchingSpec {
        alphabet: Alphabet::new(p, edges)?,
        kind: SwitchingKind::Markov {
            states,
            transition,
            stationary,
        },
        weights,
        alpha: vec![1.0; p],
    })
}

/// Left Perron vector of a positive row-stochastic matrix.
fn perron_vector(transition: &DMatrix<f64>) -> Result<DVector<f64>> {
    let n = transition.nrows();
    let pt = transition.transpose();
    let mut mu = DVector::from_element(n, 1.0 / n as f64);
    for _ in 0..100_000 {
        let mut next = &pt * &mu;
        next /= next.sum();
        let diff = (&next - &mu).amax();
        mu = next;
        if diff < PERRON_TOL * 1e-2 {
            return Ok(mu);
        }
    }
    Err(GlssError::Convergence {
        iterations: 100_000,
        residual: (&pt * &mu - &mu).amax(),
    })
}

/// Sampled π over `T` steps (`p × T`).
pub fn sample_switching(spec: &SwitchingSpec, horizon: usize, seed: u64) -> Result<DMatrix<f64>> {
    if horizon == 0 {
        return Err(GlssError::Input("horizon must be positive".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let p = spec.size();
    let mut pi = DMatrix::zeros(p, horizon);
    match &spec.kind {
        SwitchingKind::IidWhite { second_moments, law } => {
            let scale: Vec<f64> = second_moments.iter().map(|m| m.sqrt()).collect();
            for t in 0..horizon {
                pi[(0, t)] = 1.0;
                for s in 1..p {
                    let xi = match law {
                        WhiteLaw::Rademacher => {
                            if rng.random::<bool>() {
                                1.0
                            } else {
                                -1.0
                            }
                        }
                        WhiteLaw::Gaussian => StandardNormal.sample(&mut rng),
                    };
                    pi[(s, t)] = scale[s] * xi;
                }
            }
        }
        SwitchingKind::DiscreteIid { probabilities } => {
            for t in 0..horizon {
                pi[(draw(probabilities.iter().copied(), &mut rng), t)] = 1.0;
            }
        }
        SwitchingKind::Markov {
            states,
            transition,
            stationary,
        } => {
            let mut theta = draw(stationary.iter().copied(), &mut rng);
            for t in 0..horizon {
                let next = draw(transition.row(theta).iter().copied(), &mut rng);
                pi[(theta * states + next, t)] = 1.0;
                theta = next;
            }
        }
    }
    Ok(pi)
}

/// Inverse-CDF draw from a probability vector.
fn draw(probs: impl Iterator<Item = f64>, rng: &mut impl Rng) -> usize {
    let u: f64 = rng.random();
    let mut acc = 0.0;
    let mut last = 0;
    for (i, q) in probs.enumerate() {
        if q > 0.0 {
            last = i;
        }
        acc += q;
        if u < acc {
            return i;
        }
    }
    last
}

/// Products `π_w(t)` (last letter at t) for a fixed word list.
struct PathProducts {
    words: Vec<Word>,
    max_len: usize,
}

impl PathProducts {
    fn new(words: Vec<Word>) -> Self {
        let max_len = words.iter().map(|w| w.len()).max().unwrap_or(0);
        PathProducts { words, max_len }
    }

    /// Fills `out[i] = π_{words[i]}(t)`; requires `t + 1 >= max_len`.
    fn eval(&self, pi: &DMatrix<f64>, t: usize, out: &mut [f64]) {
        for (o, w) in out.iter_mut().zip(&self.words) {
            let start = t + 1 - w.len();
            *o = w
                .letters()
                .iter()
                .enumerate()
                .map(|(k, l)| pi[(*l, start + k)])
                .product();
        }
    }
}

/// Empirical check of the admissibility identities on a sampled path.
///
/// Conditional identities are checked in unconditional form through the
/// martingale-difference statistic
/// `π_{wσ}(t) π_{vσ'}(t) − δ_{σσ'} p_σ π_w(t−1) π_v(t−1)`, whose mean is zero
/// for admissible switching.
pub fn validate_admissibility(
    samples: &DMatrix<f64>,
    spec: &SwitchingSpec,
    max_depth: usize,
    tolerance: f64,
) -> Result<ValidationReport> {
    let p = spec.size();
    if samples.nrows() != p {
        return Err(GlssError::dim(format!(
            "sample matrix has {} rows, alphabet has {p} letters",
            samples.nrows()
        )));
    }
    if max_depth == 0 {
        return Err(GlssError::Input("maxDepth must be at least 1".into()));
    }
    let horizon = samples.ncols();
    let mut report = ValidationReport::new(format!("admissibility ({})", spec.kind_name()));
    let usable = horizon.saturating_sub(max_depth);
    report.push(
        Check::at_most("window", 1000.0, usable as f64)
            .with_detail(format!("T - maxDepth = {usable}, at least 1000 required")),
    );
    if usable < 1000 {
        return Ok(report);
    }
    let alphabet = spec.alphabet();

    // (a) non-admissible words vanish
    let bad: Vec<Word> = all_words(p, max_depth)
        .into_iter()
        .filter(|w| !alphabet.is_admissible(w))
        .collect();
    if !bad.is_empty() {
        let prods = PathProducts::new(bad.clone());
        let mut buf = vec![0.0; bad.len()];
        let mut worst = vec![0.0f64; bad.len()];
        for t in prods.max_len - 1..horizon {
            prods.eval(samples, t, &mut buf);
            for (m, b) in worst.iter_mut().zip(&buf) {
                *m = m.max(b.abs());
            }
        }
        for (w, m) in bad.iter().zip(worst) {
            report.push(Check::at_most(format!("inadmissible[{w}]"), m, 0.0));
        }
    }

    // (b) product-moment identities
    let words = admissible_words(alphabet, max_depth)?;
    let prods = PathProducts::new(words.clone());
    let index: std::collections::HashMap<&Word, usize> = words.iter().enumerate().map(|(i, w)| (w, i)).collect();
    struct Term {
        name: String,
        lhs: (Option<usize>, Option<usize>),
        rhs: Option<(f64, Option<usize>, Option<usize>)>,
    }
    let prefixes: Vec<Option<&Word>> = std::iter::once(None)
        .chain(words.iter().filter(|w| w.len() < max_depth).map(Some))
        .collect();
    let mut terms = Vec::new();
    for (a, wa) in prefixes.iter().enumerate() {
        for wb in prefixes.iter().skip(a) {
            for s in 0..p {
                for s2 in 0..p {
                    if wa.is_none() && wb.is_none() && s == s2 {
                        // E[π_σ²] is not fixed by the identities
                        continue;
                    }
                    if std::ptr::eq(wa, wb) && s2 < s {
                        continue;
                    }
                    let ext = |w: &Option<&Word>, l: Letter| match w {
                        None => Some(Word::letter(l)),
                        Some(w) => Some(w.push(l)),
                    };
                    let (la, lb) = (ext(wa, s).unwrap(), ext(wb, s2).unwrap());
                    let (ia, ib) = (index.get(&la).copied(), index.get(&lb).copied());
                    if ia.is_none() || ib.is_none() {
                        // inadmissible extensions are covered by (a)
                        continue;
                    }
                    let rhs = (s == s2).then(|| {
                        let at = |w: &Option<&Word>| w.map(|w| index[w]);
                        (spec.weights()[s], at(wa), at(wb))
                    });
                    terms.push(Term {
                        name: format!("moment[{la},{lb}]"),
                        lhs: (ia, ib),
                        rhs,
                    });
                }
            }
        }
    }
    let nw = words.len();
    let range = max_depth..horizon;
    let moments = stats::mean_stats(range, terms.len(), |t, out| {
        let mut cur = vec![0.0; nw];
        let mut prev = vec![0.0; nw];
        prods.eval(samples, t, &mut cur);
        prods.eval(samples, t - 1, &mut prev);
        let get = |v: &[f64], i: Option<usize>| i.map_or(1.0, |i| v[i]);
        for (k, term) in terms.iter().enumerate() {
            let mut d = get(&cur, term.lhs.0) * get(&cur, term.lhs.1);
            if let Some((ps, ra, rb)) = term.rhs {
                d -= ps * get(&prev, ra) * get(&prev, rb);
            }
            out[k] = d;
        }
    })?;
    for (k, term) in terms.iter().enumerate() {
        report.push(
            Check::at_most(
                term.name.clone(),
                moments.mean[k].abs(),
                tolerance * moments.se[k] + ROUNDING_FLOOR,
            )
            .with_detail(format!("z = {:.2}", stats::z_score(moments.mean[k], moments.se[k]))),
        );
    }

    // (c) affine normalization holds exactly
    let worst = (0..horizon)
        .map(|t| {
            let s: f64 = (0..p).map(|l| spec.alpha()[l] * samples[(l, t)]).sum();
            (s - 1.0).abs()
        })
        .fold(0.0, f64::max);
    report.push(Check::at_most("normalization", worst, 1e-12));

    // (d) stationarity of first and second moments across halves
    let half = horizon / 2;
    let feature_count = p + p * (p + 1) / 2;
    let features = |t: usize, out: &mut [f64]| {
        let mut k = 0;
        for a in 0..p {
            out[k] = samples[(a, t)];
            k += 1;
        }
        for a in 0..p {
            for b in a..p {
                out[k] = samples[(a, t)] * samples[(b, t)];
                k += 1;
            }
        }
    };
    let first = stats::mean_stats(0..half, feature_count, features)?;
    let second = stats::mean_stats(half..horizon, feature_count, features)?;
    for k in 0..feature_count {
        let diff = (first.mean[k] - second.mean[k]).abs();
        let se = first.se[k].hypot(second.se[k]);
        report.push(Check::at_most(
            format!("stationarity[{k}]"),
            diff,
            tolerance * se + ROUNDING_FLOOR,
        ));
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn two_state() -> DMatrix<f64> {
        DMatrix::from_row_slice(2, 2, &[0.9, 0.1, 0.2, 0.8])
    }

    #[test]
    fn markov_weights_and_words() {
        let spec = make_markov_spec(2, two_state()).unwrap();
        assert_eq!(spec.size(), 4);
        // (1,1), (2,1), (1,2), (2,2)
        assert_eq!(spec.weights(), &[0.9, 0.1, 0.2, 0.8]);
        let two_letter = admissible_words(spec.alphabet(), 2)
            .unwrap()
            .into_iter()
            .filter(|w| w.len() == 2)
            .count();
        assert_eq!(two_letter, 8);
        let mu = spec.stationary().unwrap();
        assert_relative_eq!(mu[0], 2.0 / 3.0, epsilon = 1e-12);
        assert_relative_eq!(mu[1], 1.0 / 3.0, epsilon = 1e-12);
    }

    #[test]
    fn degenerate_chain() {
        let spec = make_markov_spec(1, DMatrix::from_element(1, 1, 1.0)).unwrap();
        assert_eq!(spec.size(), 1);
        assert_eq!(spec.weights(), &[1.0]);
        assert!(spec.alphabet().has_edge(0, 0));
    }

    #[test]
    fn zero_transition_entry_is_rejected() {
        let err = make_markov_spec(2, DMatrix::from_row_slice(2, 2, &[0.5, 0.5, 0.0, 1.0])).unwrap_err();
        assert!(matches!(err, GlssError::InvalidTransition(_)));
        let err = make_markov_spec(2, DMatrix::from_row_slice(2, 2, &[0.5, 0.6, 0.5, 0.5])).unwrap_err();
        assert!(matches!(err, GlssError::InvalidTransition(_)));
    }

    #[test]
    fn degenerate_discrete_probabilities() {
        let spec = SwitchingSpec::discrete_iid(vec![1.0, 0.0]).unwrap();
        let pi = sample_switching(&spec, 200, 5).unwrap();
        for t in 0..200 {
            assert_eq!(pi[(0, t)], 1.0);
            assert_eq!(pi[(1, t)], 0.0);
        }
    }

    #[test]
    fn markov_columns_are_one_hot_and_chained() {
        let spec = make_markov_spec(2, two_state()).unwrap();
        let pi = sample_switching(&spec, 5000, 9).unwrap();
        let mut prev: Option<usize> = None;
        for t in 0..5000 {
            let col: Vec<f64> = pi.column(t).iter().copied().collect();
            assert_eq!(col.iter().filter(|v| **v == 1.0).count(), 1);
            assert_eq!(col.iter().sum::<f64>(), 1.0);
            let active = col.iter().position(|v| *v == 1.0).unwrap();
            if let Some(a) = prev {
                assert!(spec.alphabet().has_edge(a, active));
            }
            prev = Some(active);
        }
    }

    #[test]
    fn rademacher_second_moment() {
        let spec = SwitchingSpec::iid_white(vec![1.0, 1.0], WhiteLaw::Rademacher).unwrap();
        let t = 40_000;
        let pi = sample_switching(&spec, t, 1).unwrap();
        let m2 = pi.row(1).iter().map(|v| v * v).sum::<f64>() / t as f64;
        assert!((m2 - 1.0).abs() <= 3.0 / (t as f64).sqrt());
        assert!(pi.row(0).iter().all(|v| *v == 1.0));
    }

    #[test]
    fn sampling_is_seed_deterministic() {
        let spec = make_markov_spec(2, two_state()).unwrap();
        let a = sample_switching(&spec, 300, 42).unwrap();
        let b = sample_switching(&spec, 300, 42).unwrap();
        let c = sample_switching(&spec, 300, 43).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, c);
    }

    #[test]
    fn markov_inadmissible_word_is_exactly_zero() {
        let spec = make_markov_spec(2, two_state()).unwrap();
        let pi = sample_switching(&spec, 3000, 2).unwrap();
        let report = validate_admissibility(&pi, &spec, 2, 5.0).unwrap();
        // (1,1) followed by (1,2): middle states 1 vs 2 do not match
        let c = report.find("inadmissible[13]").unwrap();
        assert_eq!(c.statistic, 0.0);
        assert!(c.passed);
    }

    #[test]
    fn short_window_is_reported() {
        let spec = SwitchingSpec::discrete_iid(vec![0.5, 0.5]).unwrap();
        let pi = sample_switching(&spec, 500, 2).unwrap();
        let report = validate_admissibility(&pi, &spec, 2, 5.0).unwrap();
        assert!(!report.passed());
    }

    #[test]
    fn expected_products_match_empirical_means() {
        let spec = make_markov_spec(2, two_state()).unwrap();
        let t = 100_000;
        let pi = sample_switching(&spec, t, 17).unwrap();
        for w in admissible_words(spec.alphabet(), 2).unwrap() {
            let emp = (w.len() - 1..t)
                .map(|s| {
                    w.letters()
                        .iter()
                        .enumerate()
                        .map(|(k, l)| pi[(*l, s + 1 + k - w.len())])
                        .product::<f64>()
                })
                .sum::<f64>()
                / (t - w.len() + 1) as f64;
            // the chain is positively correlated, allow a wide band
            assert!((emp - spec.expected_product(&w)).abs() < 0.02, "{w}: {emp}");
        }
    }
}
