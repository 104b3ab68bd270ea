//! Words over a finite alphabet, the admissible language defined by an edge
//! set, word-indexed weights `p_w` and matrix products `A_w`, and the
//! Kronecker stability operator.
//!
//! Letters are 0-based in the API (`0..p`); they print 1-based.

use std::collections::{BTreeSet, HashMap};
use std::fmt;

use nalgebra::{DMatrix, DVector};

use crate::error::{GlssError, Result};
use crate::linalg;

pub type Letter = usize;

/// Alphabet `{0, .., p-1}` with an edge relation. A word `s1 s2 .. sk` is
/// admissible when every consecutive pair is an edge.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Alphabet {
    size: usize,
    edges: Vec<bool>,
}

impl Alphabet {
    pub fn new(size: usize, edges: impl IntoIterator<Item = (Letter, Letter)>) -> Result<Self> {
        if size == 0 {
            return Err(GlssError::InvalidAlphabet("alphabet must be non-empty".into()));
        }
        let mut table = vec![false; size * size];
        for (a, b) in edges {
            if a >= size || b >= size {
                return Err(GlssError::InvalidAlphabet(format!(
                    "edge ({}, {}) outside alphabet of size {size}",
                    a + 1,
                    b + 1
                )));
            }
            table[a * size + b] = true;
        }
        let alphabet = Alphabet { size, edges: table };
        if let Some(dead) = (0..size).find(|&a| alphabet.successors(a).next().is_none()) {
            return Err(GlssError::InvalidAlphabet(format!(
                "letter {} has no outgoing edge",
                dead + 1
            )));
        }
        Ok(alphabet)
    }

    /// Alphabet with `E = Σ × Σ`.
    pub fn full(size: usize) -> Result<Self> {
        Self::new(size, (0..size).flat_map(|a| (0..size).map(move |b| (a, b))))
    }

    pub fn size(&self) -> usize {
        self.size
    }

    pub fn has_edge(&self, a: Letter, b: Letter) -> bool {
        self.edges[a * self.size + b]
    }

    pub fn is_full(&self) -> bool {
        self.edges.iter().all(|e| *e)
    }

    pub fn edges(&self) -> impl Iterator<Item = (Letter, Letter)> + '_ {
        let n = self.size;
        (0..n * n).filter(|i| self.edges[*i]).map(move |i| (i / n, i % n))
    }

    pub fn successors(&self, a: Letter) -> impl Iterator<Item = Letter> + '_ {
        (0..self.size).filter(move |b| self.has_edge(a, *b))
    }

    pub fn predecessors(&self, b: Letter) -> impl Iterator<Item = Letter> + '_ {
        (0..self.size).filter(move |a| self.has_edge(*a, b))
    }

    pub fn max_out_degree(&self) -> usize {
        (0..self.size).map(|a| self.successors(a).count()).max().unwrap_or(0)
    }

    /// `true` for non-empty words whose consecutive letters are all edges.
    pub fn is_admissible(&self, word: &Word) -> bool {
        !word.is_empty()
            && word.0.iter().all(|l| *l < self.size)
            && word.0.windows(2).all(|p| self.has_edge(p[0], p[1]))
    }
}

/// Finite sequence of letters; the empty word is `ε`.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Word(pub Vec<Letter>);

impl Word {
    pub fn empty() -> Self {
        Word(Vec::new())
    }

    pub fn letter(l: Letter) -> Self {
        Word(vec![l])
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn letters(&self) -> &[Letter] {
        &self.0
    }

    pub fn first(&self) -> Option<Letter> {
        self.0.first().copied()
    }

    pub fn last(&self) -> Option<Letter> {
        self.0.last().copied()
    }

    pub fn concat(&self, other: &Word) -> Word {
        let mut v = self.0.clone();
        v.extend_from_slice(&other.0);
        Word(v)
    }

    pub fn push(&self, l: Letter) -> Word {
        let mut v = self.0.clone();
        v.push(l);
        Word(v)
    }

    /// The word without its first letter.
    pub fn tail(&self) -> Word {
        Word(self.0.get(1..).unwrap_or(&[]).to_vec())
    }
}

impl fmt::Display for Word {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_empty() {
            return f.write_str("eps");
        }
        let wide = self.0.iter().any(|l| *l >= 9);
        for (i, l) in self.0.iter().enumerate() {
            if wide && i > 0 {
                f.write_str(".")?;
            }
            write!(f, "{}", l + 1)?;
        }
        Ok(())
    }
}

/// Admissible words of length `1..=max_depth` in length-major,
/// lexicographic order.
pub fn admissible_words(alphabet: &Alphabet, max_depth: usize) -> Result<Vec<Word>> {
    if max_depth == 0 {
        return Err(GlssError::Input("maxDepth must be at least 1".into()));
    }
    let mut out: Vec<Word> = (0..alphabet.size()).map(Word::letter).collect();
    let mut layer_start = 0;
    for _ in 1..max_depth {
        let layer_end = out.len();
        for i in layer_start..layer_end {
            let w = out[i].clone();
            let last = w.last().expect("non-empty");
            for s in alphabet.successors(last) {
                out.push(w.push(s));
            }
        }
        layer_start = layer_end;
    }
    Ok(out)
}

#[derive(Clone, Debug)]
pub struct WordEntry {
    pub word: Word,
    pub weight: f64,
    pub product: DMatrix<f64>,
}

/// `ε` plus every admissible word up to `max_depth`, each with `p_w` and
/// `A_w = A_{sk} ... A_{s1}`.
#[derive(Clone, Debug)]
pub struct WordTable {
    max_depth: usize,
    dim: usize,
    entries: Vec<WordEntry>,
    index: HashMap<Word, usize>,
}

impl WordTable {
    pub fn max_depth(&self) -> usize {
        self.max_depth
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Entries in order: `ε` first, then length-major lexicographic.
    pub fn entries(&self) -> &[WordEntry] {
        &self.entries
    }

    pub fn get(&self, w: &Word) -> Option<&WordEntry> {
        self.index.get(w).map(|i| &self.entries[*i])
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

pub fn build_word_table(
    alphabet: &Alphabet,
    matrices: &[DMatrix<f64>],
    weights: &[f64],
    max_depth: usize,
) -> Result<WordTable> {
    let n = check_letter_data(alphabet.size(), matrices, weights)?;
    if let Some(bad) = weights.iter().position(|w| w.is_nan() || *w <= 0.0) {
        return Err(GlssError::Input(format!(
            "weight of letter {} must be positive",
            bad + 1
        )));
    }
    let words = admissible_words(alphabet, max_depth)?;
    let mut entries = Vec::with_capacity(words.len() + 1);
    let mut index = HashMap::with_capacity(words.len() + 1);
    entries.push(WordEntry {
        word: Word::empty(),
        weight: 1.0,
        product: DMatrix::identity(n, n),
    });
    index.insert(Word::empty(), 0);
    for w in words {
        let (prefix, last) = w.0.split_at(w.len() - 1);
        let parent = &entries[index[&Word(prefix.to_vec())]];
        let s = last[0];
        let entry = WordEntry {
            weight: parent.weight * weights[s],
            product: &matrices[s] * &parent.product,
            word: w.clone(),
        };
        index.insert(w, entries.len());
        entries.push(entry);
    }
    Ok(WordTable {
        max_depth,
        dim: n,
        entries,
        index,
    })
}

fn check_letter_data(p: usize, matrices: &[DMatrix<f64>], weights: &[f64]) -> Result<usize> {
    if matrices.len() != p || weights.len() != p {
        return Err(GlssError::dim(format!(
            "expected {p} matrices and weights, got {} and {}",
            matrices.len(),
            weights.len()
        )));
    }
    let n = matrices.first().map_or(0, |m| m.nrows());
    for (i, m) in matrices.iter().enumerate() {
        if m.shape() != (n, n) {
            return Err(GlssError::dim(format!(
                "matrix of letter {} is {}x{}, expected {n}x{n}",
                i + 1,
                m.nrows(),
                m.ncols()
            )));
        }
    }
    Ok(n)
}

/// `M = Σ_s p_s A_s ⊗ A_s`.
pub fn kronecker_operator(matrices: &[DMatrix<f64>], weights: &[f64]) -> Result<DMatrix<f64>> {
    let n = check_letter_data(matrices.len(), matrices, weights)?;
    let mut m = DMatrix::zeros(n * n, n * n);
    for (a, p) in matrices.iter().zip(weights) {
        m += a.kronecker(a) * *p;
    }
    Ok(m)
}

/// Spectral radius of `Σ_s p_s A_s ⊗ A_s`. Dense eigensolver while
/// `n² <= 64`, power iteration from `vec(I)` above that.
pub fn stability_radius(matrices: &[DMatrix<f64>], weights: &[f64]) -> Result<f64> {
    if matrices.is_empty() {
        return Err(GlssError::dim("no matrices"));
    }
    let m = kronecker_operator(matrices, weights)?;
    let n = matrices[0].nrows();
    if n * n <= linalg::DENSE_EIGEN_MAX {
        Ok(linalg::spectral_radius_dense(&m))
    } else {
        Ok(stability_radius_power(&m, n))
    }
}

/// Spectral radius of the second-moment operator restricted to the edge
/// set: on per-letter blocks, `G_τ ← p_τ A_τ (Σ_{(σ,τ)∈E} G_σ) A_τᵀ`. Equal
/// to [`stability_radius`] on a full alphabet; smaller when products along
/// non-edges do not vanish.
pub fn edge_stability_radius(alphabet: &Alphabet, matrices: &[DMatrix<f64>], weights: &[f64]) -> Result<f64> {
    let n = check_letter_data(alphabet.size(), matrices, weights)?;
    if alphabet.is_full() {
        return stability_radius(matrices, weights);
    }
    let p = alphabet.size();
    let k = n * n;
    let mut m = DMatrix::zeros(p * k, p * k);
    for t in 0..p {
        let block = matrices[t].kronecker(&matrices[t]) * weights[t];
        for s in alphabet.predecessors(t) {
            m.view_mut((t * k, s * k), (k, k)).copy_from(&block);
        }
    }
    if p * k <= 4 * linalg::DENSE_EIGEN_MAX {
        Ok(linalg::spectral_radius_dense(&m))
    } else {
        let start = DVector::from_iterator(
            p * k,
            (0..p * k).map(|i| if (i % k) / n == (i % k) % n { 1.0 } else { 0.0 }),
        );
        Ok(linalg::spectral_radius_power(
            &m,
            &start,
            linalg::POWER_TOL,
            linalg::POWER_MAX_ITER,
        ))
    }
}

/// Power-iteration route on a precomputed Kronecker operator, started from
/// `vec(I_n)` (the operator preserves the PSD cone, so the dominant
/// eigenvalue is real and has a PSD eigenvector).
pub fn stability_radius_power(operator: &DMatrix<f64>, n: usize) -> f64 {
    let start = DVector::from_iterator(n * n, (0..n * n).map(|i| if i / n == i % n { 1.0 } else { 0.0 }));
    linalg::spectral_radius_power(operator, &start, linalg::POWER_TOL, linalg::POWER_MAX_ITER)
}

/// All words of length `1..=max_depth` over the alphabet, admissible or
/// not, length-major lexicographic.
pub fn all_words(size: usize, max_depth: usize) -> Vec<Word> {
    let mut out: Vec<Word> = (0..size).map(Word::letter).collect();
    let mut start = 0;
    for _ in 1..max_depth {
        let end = out.len();
        for i in start..end {
            for s in 0..size {
                let w = out[i].push(s);
                out.push(w);
            }
        }
        start = end;
    }
    out
}

/// Edge set as a sorted set of pairs.
pub fn edge_set(alphabet: &Alphabet) -> BTreeSet<(Letter, Letter)> {
    alphabet.edges().collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn markov_alphabet(states: usize) -> Alphabet {
        // letter (q2, q1) has index q1 * states + q2; (a, b) is an edge when
        // the target state of `a` is the source state of `b`.
        let p = states * states;
        let edges = (0..p).flat_map(|a| (0..p).map(move |b| (a, b))).filter(|(a, b)| {
            let target_a = a % states;
            let source_b = b / states;
            target_a == source_b
        });
        Alphabet::new(p, edges).unwrap()
    }

    #[test]
    fn single_letter_language() {
        let a = Alphabet::full(1).unwrap();
        let words = admissible_words(&a, 2).unwrap();
        assert_eq!(words, vec![Word(vec![0]), Word(vec![0, 0])]);
    }

    #[test]
    fn full_two_letter_language_in_order() {
        let a = Alphabet::full(2).unwrap();
        let words: Vec<String> = admissible_words(&a, 2).unwrap().iter().map(|w| w.to_string()).collect();
        assert_eq!(words, ["1", "2", "11", "12", "21", "22"]);
    }

    #[test]
    fn markov_embedding_two_states_has_twelve_words() {
        let a = markov_alphabet(2);
        let words = admissible_words(&a, 2).unwrap();
        // brute force: filter all 4 + 16 words by the middle-state rule
        let brute = all_words(4, 2)
            .into_iter()
            .filter(|w| w.0.windows(2).all(|p| p[0] % 2 == p[1] / 2))
            .count();
        assert_eq!(brute, 12);
        assert_eq!(words.len(), 12);
    }

    #[test]
    fn dead_letter_is_rejected() {
        let err = Alphabet::new(2, [(0, 1)]).unwrap_err();
        assert!(matches!(err, GlssError::InvalidAlphabet(_)));
    }

    #[test]
    fn zero_depth_is_rejected() {
        let a = Alphabet::full(2).unwrap();
        assert!(admissible_words(&a, 0).is_err());
    }

    #[test]
    fn table_scalar_products() {
        let a = Alphabet::full(1).unwrap();
        let t = build_word_table(&a, &[DMatrix::from_element(1, 1, 0.5)], &[1.0], 2).unwrap();
        let e = t.get(&Word(vec![0, 0])).unwrap();
        assert_relative_eq!(e.product[(0, 0)], 0.25);
        assert_relative_eq!(e.weight, 1.0);
        let eps = t.get(&Word::empty()).unwrap();
        assert_eq!(eps.weight, 1.0);
        assert_eq!(eps.product, DMatrix::identity(1, 1));
    }

    #[test]
    fn table_products_are_reversed() {
        let a = Alphabet::full(2).unwrap();
        let a1 = DMatrix::from_diagonal(&DVector::from_vec(vec![1.0, 2.0]));
        let a2 = DMatrix::from_diagonal(&DVector::from_vec(vec![3.0, 4.0]));
        let mut a2_full = a2.clone();
        a2_full[(0, 1)] = 1.0; // non-commuting to make the order visible
        let t = build_word_table(&a, &[a1.clone(), a2_full.clone()], &[0.5, 0.5], 2).unwrap();
        assert_eq!(t.get(&Word(vec![0, 1])).unwrap().product, &a2_full * &a1);
        let td = build_word_table(&a, &[a1, a2], &[0.5, 0.5], 2).unwrap();
        assert_eq!(
            td.get(&Word(vec![0, 1])).unwrap().product,
            DMatrix::from_diagonal(&DVector::from_vec(vec![3.0, 8.0]))
        );
    }

    #[test]
    fn table_rejects_dimension_mismatch() {
        let a = Alphabet::full(2).unwrap();
        let err = build_word_table(&a, &[DMatrix::zeros(2, 2), DMatrix::zeros(3, 3)], &[0.5, 0.5], 2).unwrap_err();
        assert!(matches!(err, GlssError::Dimension(_)));
    }

    #[test]
    fn stability_radius_examples() {
        let r = stability_radius(&[DMatrix::from_element(1, 1, 0.5)], &[1.0]).unwrap();
        assert_relative_eq!(r, 0.25, epsilon = 1e-14);
        let r0 = stability_radius(&[DMatrix::zeros(2, 2), DMatrix::zeros(2, 2)], &[0.5, 0.5]).unwrap();
        assert_eq!(r0, 0.0);
        let a1 = DMatrix::from_diagonal(&DVector::from_vec(vec![0.9, 0.0]));
        let a2 = DMatrix::from_diagonal(&DVector::from_vec(vec![0.0, 0.9]));
        let r2 = stability_radius(&[a1, a2], &[0.5, 0.5]).unwrap();
        assert_relative_eq!(r2, 0.405, epsilon = 1e-12);
    }

    fn random_matrix(n: usize, seed: &[f64]) -> DMatrix<f64> {
        DMatrix::from_iterator(n, n, seed.iter().copied().cycle().take(n * n))
    }

    #[test]
    fn edge_radius_matches_full_radius_on_full_alphabet_and_lifted_models() {
        let a = [
            DMatrix::from_row_slice(2, 2, &[0.5, 0.2, -0.3, 0.4]),
            DMatrix::from_row_slice(2, 2, &[0.1, 0.7, 0.0, -0.6]),
        ];
        let full = Alphabet::full(2).unwrap();
        let r1 = edge_stability_radius(&full, &a, &[0.3, 0.7]).unwrap();
        assert_relative_eq!(r1, stability_radius(&a, &[0.3, 0.7]).unwrap(), epsilon = 1e-12);
        // lifted scalar Markov letters: products along non-edges vanish, so
        // both operators agree
        let alphabet = markov_alphabet(2);
        let lifted: Vec<DMatrix<f64>> = (0..4)
            .map(|l| {
                let mut m = DMatrix::zeros(2, 2);
                m[(l % 2, l / 2)] = 0.5 + 0.1 * l as f64;
                m
            })
            .collect();
        let w = [0.6, 0.4, 0.3, 0.7];
        assert_relative_eq!(
            edge_stability_radius(&alphabet, &lifted, &w).unwrap(),
            stability_radius(&lifted, &w).unwrap(),
            epsilon = 1e-10
        );
        // unstructured letters: the edge-restricted radius is the smaller one
        let dense: Vec<DMatrix<f64>> = (0..4)
            .map(|l| DMatrix::from_element(2, 2, 0.3 + 0.05 * l as f64))
            .collect();
        assert!(edge_stability_radius(&alphabet, &dense, &w).unwrap() <= stability_radius(&dense, &w).unwrap() + 1e-12);
    }

    proptest! {
        #[test]
        fn enumeration_matches_brute_force(p in 1usize..=4, depth in 1usize..=4, mask in any::<u16>()) {
            let edges: Vec<(usize, usize)> = (0..p * p)
                .filter(|i| mask & (1 << i) != 0 || i % (p + 1) == 0)
                .map(|i| (i / p, i % p))
                .collect();
            let a = Alphabet::new(p, edges).unwrap();
            let fast = admissible_words(&a, depth).unwrap();
            let brute: Vec<Word> = all_words(p, depth).into_iter().filter(|w| a.is_admissible(w)).collect();
            prop_assert_eq!(&fast, &brute);
            let bound = p * a.max_out_degree().pow(depth as u32 - 1) * depth;
            prop_assert!(fast.len() <= bound);
        }

        #[test]
        fn products_and_weights_compose(
            vals in proptest::collection::vec(-1.0f64..1.0, 18),
            w1 in 0.1f64..1.0, w2 in 0.1f64..1.0,
            u in proptest::collection::vec(0usize..2, 1..3),
            v in proptest::collection::vec(0usize..2, 1..3),
        ) {
            let a = Alphabet::full(2).unwrap();
            let mats = [random_matrix(3, &vals[..9]), random_matrix(3, &vals[9..])];
            let t = build_word_table(&a, &mats, &[w1, w2], 4).unwrap();
            let (u, v) = (Word(u), Word(v));
            let uv = u.concat(&v);
            let (eu, ev, euv) = (t.get(&u).unwrap(), t.get(&v).unwrap(), t.get(&uv).unwrap());
            let expect = &ev.product * &eu.product;
            prop_assert!((&euv.product - &expect).norm() <= 1e-12 * (1.0 + expect.norm()));
            prop_assert!((euv.weight - eu.weight * ev.weight).abs() <= 1e-15);
            prop_assert_eq!(u.concat(&Word::empty()), u.clone());
            prop_assert_eq!(Word::empty().concat(&u), u);
        }

        #[test]
        fn power_iteration_matches_dense(vals in proptest::collection::vec(-1.0f64..1.0, 32), n in 1usize..=4) {
            let mats = [random_matrix(n, &vals[..16]), random_matrix(n, &vals[16..])];
            let m = kronecker_operator(&mats, &[0.3, 0.7]).unwrap();
            let dense = linalg::spectral_radius_dense(&m);
            let power = stability_radius_power(&m, n);
            prop_assert!((dense - power).abs() <= 1e-8 * dense.max(1.0), "dense {} power {}", dense, power);
        }
    }
}
