//! Random stable models and basis changes for tests and experiments.

use nalgebra::DMatrix;
use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::Result;
use crate::model::{Dims, GlssModel, LetterMatrices, NoiseLaw};
use crate::switching::{SwitchingSpec, WhiteLaw};
use crate::words;

fn gaussian<R: Rng + ?Sized>(rng: &mut R, r: usize, c: usize) -> DMatrix<f64> {
    DMatrix::from_fn(r, c, |_, _| rng.sample(StandardNormal))
}

/// Random factor with singular values in `[0.5, 1.5]`.
fn factor<R: Rng + ?Sized>(rng: &mut R, n: usize) -> DMatrix<f64> {
    if n == 0 {
        return DMatrix::zeros(0, 0);
    }
    let (q1, q2) = (orthogonal(rng, n), orthogonal(rng, n));
    let s = DMatrix::from_diagonal(&nalgebra::DVector::from_fn(n, |_, _| rng.random_range(0.5..1.5)));
    q1 * s * q2
}

fn orthogonal<R: Rng + ?Sized>(rng: &mut R, n: usize) -> DMatrix<f64> {
    gaussian(rng, n, n).qr().q()
}

/// Scales every `A_σ` by a common factor so that the stability radius is
/// `rho`. Leaves the model unchanged if its radius is zero.
pub fn rescale_to_radius(model: &mut GlssModel, rho: f64) -> Result<()> {
    let current = words::stability_radius(&model.a_matrices(), model.weights())?;
    if current > 0.0 {
        let s = (rho / current).sqrt();
        for l in &mut model.letters {
            l.a *= s;
        }
    }
    Ok(())
}

fn letters_from<R: Rng + ?Sized>(rng: &mut R, p: usize, dims: Dims) -> Vec<LetterMatrices> {
    (0..p)
        .map(|_| LetterMatrices {
            a: gaussian(rng, dims.nx, dims.nx),
            b: gaussian(rng, dims.nx, dims.nu),
            k: gaussian(rng, dims.nx, dims.nn),
        })
        .collect()
}

/// Random model under discrete i.i.d. switching with `p` letters whose
/// probabilities are drawn from `[0.3, 0.7]` (for `p = 2`) or near
/// uniform, with stability radius `rho`.
pub fn random_discrete_iid<R: Rng + ?Sized>(rng: &mut R, p: usize, dims: Dims, rho: f64) -> Result<GlssModel> {
    let probabilities = if p == 2 {
        let q = rng.random_range(0.3..0.7);
        vec![q, 1.0 - q]
    } else {
        let raw: Vec<f64> = (0..p).map(|_| rng.random_range(0.5..1.5)).collect();
        let total: f64 = raw.iter().sum();
        let mut probs: Vec<f64> = raw.iter().map(|v| v / total).collect();
        let head: f64 = probs[..p - 1].iter().sum();
        probs[p - 1] = 1.0 - head;
        probs
    };
    let spec = SwitchingSpec::discrete_iid(probabilities)?;
    finish(rng, spec, dims, rho)
}

/// Random model under i.i.d. white switching (`π_1 ≡ 1`, the other letters
/// zero-mean with second moments in `[0.5, 1.5]`).
pub fn random_iid_white<R: Rng + ?Sized>(
    rng: &mut R,
    p: usize,
    law: WhiteLaw,
    dims: Dims,
    rho: f64,
) -> Result<GlssModel> {
    let mut moments = vec![1.0];
    moments.extend((1..p).map(|_| rng.random_range(0.5..1.5)));
    let spec = SwitchingSpec::iid_white(moments, law)?;
    finish(rng, spec, dims, rho)
}

fn finish<R: Rng + ?Sized>(rng: &mut R, spec: SwitchingSpec, dims: Dims, rho: f64) -> Result<GlssModel> {
    let letters = letters_from(rng, spec.size(), dims);
    let c = gaussian(rng, dims.ny, dims.nx);
    let d = gaussian(rng, dims.ny, dims.nu);
    let f = factor(rng, dims.ny.max(dims.nn))
        .view((0, 0), (dims.ny, dims.nn))
        .into_owned();
    let noise = NoiseLaw::constant(factor(rng, dims.nn), factor(rng, dims.nu));
    let mut m = GlssModel::new(letters, c, d, f, spec, noise)?;
    rescale_to_radius(&mut m, rho)?;
    Ok(m)
}

/// Random model under Markov-embedded switching on `states` chain states.
/// The state is split into one block of size `block` per chain state and
/// letter `(q2, q1)` maps block `q1` into block `q2`, so products along
/// non-edges vanish. Transition entries lie in `[0.25, 0.75]` for two
/// states. The noise law differs between regimes.
pub fn random_markov<R: Rng + ?Sized>(
    rng: &mut R,
    states: usize,
    block: usize,
    nu: usize,
    ny: usize,
    nn: usize,
    rho: f64,
) -> Result<GlssModel> {
    let transition = DMatrix::from_fn(states, states, |_, _| rng.random_range(0.25..0.75));
    let transition = DMatrix::from_fn(states, states, |i, j| {
        let row: f64 = transition.row(i).sum();
        transition[(i, j)] / row
    });
    let spec = SwitchingSpec::markov(states, transition)?;
    let nx = states * block;
    let mut letters = Vec::with_capacity(states * states);
    for l in 0..states * states {
        // letter index l = q1 * states + q2
        let (q1, q2) = (l / states, l % states);
        let mut a = DMatrix::zeros(nx, nx);
        a.view_mut((q2 * block, q1 * block), (block, block))
            .copy_from(&gaussian(rng, block, block));
        let mut b = DMatrix::zeros(nx, nu);
        b.view_mut((q2 * block, 0), (block, nu))
            .copy_from(&gaussian(rng, block, nu));
        let mut k = DMatrix::zeros(nx, nn);
        k.view_mut((q2 * block, 0), (block, nn))
            .copy_from(&gaussian(rng, block, nn));
        letters.push(LetterMatrices { a, b, k });
    }
    let c = gaussian(rng, ny, nx);
    let d = gaussian(rng, ny, nu);
    let f = factor(rng, ny.max(nn)).view((0, 0), (ny, nn)).into_owned();
    let noise = NoiseLaw {
        v_factors: (0..states).map(|_| factor(rng, nn)).collect(),
        u_factors: (0..states).map(|_| factor(rng, nu)).collect(),
    };
    let mut m = GlssModel::new(letters, c, d, f, spec, noise)?;
    rescale_to_radius(&mut m, rho)?;
    Ok(m)
}

/// Random invertible matrix with singular values log-uniform in
/// `[1, max_cond]`, so its condition number is at most `max_cond`.
pub fn random_basis<R: Rng + ?Sized>(rng: &mut R, n: usize, max_cond: f64) -> DMatrix<f64> {
    let (q1, q2) = (orthogonal(rng, n), orthogonal(rng, n));
    let top = max_cond.max(1.0).ln();
    let s = nalgebra::DVector::from_fn(n, |_, _| rng.random_range(0.0..=top).exp());
    q1 * DMatrix::from_diagonal(&s) * q2
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg;
    use crate::model::validate_sglss;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn discrete_models_hit_the_radius_and_validate() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for nx in 1..=3 {
            let dims = Dims {
                nx,
                nu: 1,
                ny: 1,
                nn: 1,
            };
            let m = random_discrete_iid(&mut rng, 2, dims, 0.5).unwrap();
            assert!((m.stability_radius().unwrap() - 0.5).abs() < 1e-9);
            assert!(validate_sglss(&m).passed(), "{}", validate_sglss(&m));
            let w = m.weights();
            assert!(w[0] >= 0.3 && w[0] <= 0.7);
        }
    }

    #[test]
    fn markov_models_have_vanishing_non_edge_products() {
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        let m = random_markov(&mut rng, 2, 1, 1, 1, 1, 0.4).unwrap();
        assert_eq!(m.dims.nx, 2);
        assert_eq!(m.letter_count(), 4);
        assert_eq!(m.noise.v_factors.len(), 2);
        let report = validate_sglss(&m);
        assert!(report.passed(), "{report}");
        assert!((m.stability_radius().unwrap() - 0.4).abs() < 1e-9);
    }

    #[test]
    fn white_models_validate() {
        let mut rng = ChaCha8Rng::seed_from_u64(13);
        let dims = Dims {
            nx: 2,
            nu: 1,
            ny: 1,
            nn: 1,
        };
        let m = random_iid_white(&mut rng, 2, WhiteLaw::Rademacher, dims, 0.5).unwrap();
        assert!(validate_sglss(&m).passed());
    }

    #[test]
    fn basis_condition_is_bounded() {
        let mut rng = ChaCha8Rng::seed_from_u64(14);
        for _ in 0..20 {
            let t = random_basis(&mut rng, 3, 1e3);
            assert!(linalg::condition_number(&t) <= 1e3 * (1.0 + 1e-9));
        }
    }
}
