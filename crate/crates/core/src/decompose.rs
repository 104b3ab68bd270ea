//! Deterministic/stochastic output decomposition `y = y^d + y^s`.

use nalgebra::DMatrix;

use crate::error::{GlssError, Result};
use crate::model::{stationary_state_series, GlssModel};
use crate::regress;
use crate::report::{Check, ValidationReport};
use crate::simulate::{Trajectory, ZIndex};
use crate::stats::{self, SparseVec};
use crate::switching::SwitchingSpec;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Method {
    Series,
    Projection,
}

impl Method {
    pub fn name(self) -> &'static str {
        match self {
            Method::Series => "series",
            Method::Projection => "projection",
        }
    }
}

#[derive(Clone, Debug)]
pub struct DecompositionResult {
    pub y_d: DMatrix<f64>,
    pub y_s: DMatrix<f64>,
    /// State components (series method only).
    pub x_d: Option<DMatrix<f64>>,
    pub x_s: Option<DMatrix<f64>>,
    pub depth: usize,
    pub method: Method,
    /// First sample at which the decomposition is defined.
    pub valid_from: usize,
    /// Projection coefficients: rows are `u(t)` then `z^u_w(t)` per word.
    pub coef: Option<DMatrix<f64>>,
    /// `rms(y − y_d − y_s)` over the valid window (zero for projection).
    pub tail_rms: f64,
}

/// Truncated series decomposition:
/// `y_d = C x_d + D u`, `y_s = C x_s + F v`.
pub fn decompose_series(model: &GlssModel, traj: &Trajectory, depth: usize) -> Result<DecompositionResult> {
    model.require_stable()?;
    let horizon = traj.len();
    if traj.v.ncols() != horizon || traj.v.nrows() != model.dims.nn {
        return Err(GlssError::Input("trajectory does not carry the noise v".into()));
    }
    let x_d = stationary_state_series(model, &traj.pi, Some(&traj.u), None, depth)?;
    let x_s = stationary_state_series(model, &traj.pi, None, Some(&traj.v), depth)?;
    let mut y_d = &model.c * &x_d + &model.d * &traj.u;
    let mut y_s = &model.c * &x_s + &model.f * &traj.v;
    for t in 0..depth {
        y_d.column_mut(t).fill(0.0);
        y_s.column_mut(t).fill(0.0);
    }
    let gap = &traj.y - &y_d - &y_s;
    let tail_rms = stats::rms(&gap, depth..horizon);
    Ok(DecompositionResult {
        y_d,
        y_s,
        x_d: Some(x_d),
        x_s: Some(x_s),
        depth,
        method: Method::Series,
        valid_from: depth,
        coef: None,
        tail_rms,
    })
}

/// Regressor vector `[u(t); z^u_w(t) ...]`.
fn input_regressors(index: &ZIndex, pi: &DMatrix<f64>, u: &DMatrix<f64>, t: usize, out: &mut SparseVec) {
    let mut mult = vec![0.0; index.len()];
    index.multipliers(pi, t, &mut mult);
    index.push_z(out, 0, &mult, u, t, true);
}

/// Data-driven decomposition: `y_d` is the least-squares projection of `y`
/// on `{u(t)} ∪ {z^u_w(t)}_{|w| ≤ N}` with one global coefficient matrix.
pub fn decompose_projection(
    y: &DMatrix<f64>,
    u: &DMatrix<f64>,
    pi: &DMatrix<f64>,
    spec: &SwitchingSpec,
    depth: usize,
    ridge: Option<f64>,
) -> Result<DecompositionResult> {
    let horizon = pi.ncols();
    if y.ncols() != horizon || u.ncols() != horizon {
        return Err(GlssError::dim("y, u and π must have the same length"));
    }
    let index = ZIndex::for_spec(spec, depth)?;
    let dx = (index.len() + 1) * u.nrows();
    let ny = y.nrows();
    if horizon < depth || horizon - depth < 10 * dx {
        return Err(GlssError::Window(format!(
            "{} samples after depth {depth}, at least {} needed for {dx} regressors",
            horizon.saturating_sub(depth),
            10 * dx
        )));
    }
    let range = depth..horizon;
    let sums = stats::normal_sums(range.clone(), dx, ny, |t, x, yt| {
        input_regressors(&index, pi, u, t, x);
        for (j, v) in y.column(t).iter().enumerate() {
            yt[j] = *v;
        }
    })?;
    let fit = regress::solve(&sums, ridge)?;
    let y_d = regress::predict(horizon, range, &fit.coef, |t, x| input_regressors(&index, pi, u, t, x));
    let mut y_s = y - &y_d;
    for t in 0..depth {
        y_s.column_mut(t).fill(0.0);
    }
    Ok(DecompositionResult {
        y_d,
        y_s,
        x_d: None,
        x_s: None,
        depth,
        method: Method::Projection,
        valid_from: depth,
        coef: Some(fit.coef),
        tail_rms: 0.0,
    })
}

#[derive(Clone, Copy, Debug)]
pub struct Theorem1Options {
    pub depth: usize,
    pub ridge: Option<f64>,
    /// z-score threshold for the orthogonality checks.
    pub z_tolerance: f64,
    /// Allowed `rms(y_d^series − y_d^projection) / rms(y)`.
    pub distance_tolerance: f64,
}

impl Default for Theorem1Options {
    fn default() -> Self {
        Theorem1Options {
            depth: 4,
            ridge: None,
            z_tolerance: 5.0,
            distance_tolerance: 0.05,
        }
    }
}

#[derive(Clone, Debug)]
pub struct Theorem1Outcome {
    pub report: ValidationReport,
    pub series: DecompositionResult,
    pub projection: DecompositionResult,
}

/// Decomposes by both methods and checks the orthogonality structure of
/// the decomposition.
pub fn verify_theorem1(model: &GlssModel, traj: &Trajectory, opts: Theorem1Options) -> Result<Theorem1Outcome> {
    let depth = opts.depth;
    let series = decompose_series(model, traj, depth)?;
    let projection = decompose_projection(&traj.y, &traj.u, &traj.pi, &model.switching, depth, opts.ridge)?;
    let horizon = traj.len();
    let range = depth..horizon;
    let mut report = ValidationReport::new("output decomposition");

    // (a) series vs projection
    let diff = &series.y_d - &projection.y_d;
    let y_rms = stats::rms(&traj.y, range.clone());
    let dist = if y_rms > 0.0 {
        stats::rms(&diff, range.clone()) / y_rms
    } else {
        stats::rms(&diff, range.clone())
    };
    report.push(Check::at_most(
        "distance y_d series/projection",
        dist,
        opts.distance_tolerance,
    ));
    report.push(
        Check::at_most(
            "additivity projection",
            stats::rms(&(&traj.y - &projection.y_d - &projection.y_s), range.clone()),
            0.0,
        )
        .with_detail("rms of y - y_d - y_s"),
    );

    let index = ZIndex::for_spec(&model.switching, depth)?;
    let nu = model.dims.nu;
    let nn = model.dims.nn;
    let blocks = index.len() + 1;
    let name = |i: usize| {
        if i == 0 {
            "eps".to_string()
        } else {
            index.words()[i - 1].to_string()
        }
    };

    // (b) noise family against the input family
    let (pi, u, v) = (&traj.pi, &traj.u, &traj.v);
    let cs = stats::cross_stats(range.clone(), blocks * nn, blocks * nu, |t, a, b| {
        let mut mult = vec![0.0; index.len()];
        index.multipliers(pi, t, &mut mult);
        index.push_z(a, 0, &mult, v, t, true);
        index.push_z(b, 0, &mult, u, t, true);
    })?;
    for i in 0..blocks {
        let row = cs.block(i * nn, 0, nn, blocks * nu);
        report.push(Check::at_most(
            format!("orth v[{}]", name(i)),
            row.max_z(),
            opts.z_tolerance,
        ));
    }

    // (c) stochastic state against the input family
    let x_s = series.x_s.as_ref().expect("series method has states");
    let cs = stats::cross_stats(range.clone(), model.dims.nx, blocks * nu, |t, a, b| {
        let mut mult = vec![0.0; index.len()];
        index.multipliers(pi, t, &mut mult);
        a.extend(x_s.column(t).iter().copied().enumerate());
        index.push_z(b, 0, &mult, u, t, true);
    })?;
    for j in 0..blocks {
        let col = cs.block(0, j * nu, model.dims.nx, nu);
        report.push(Check::at_most(
            format!("orth x_s[{}]", name(j)),
            col.max_z(),
            opts.z_tolerance,
        ));
    }

    // (d) the two output components are uncorrelated
    let cs = stats::second_moment(&series.y_d, &series.y_s, range)?;
    report.push(Check::at_most("orth y_d/y_s", cs.max_z(), opts.z_tolerance));

    Ok(Theorem1Outcome {
        report,
        series,
        projection,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{LetterMatrices, NoiseLaw};
    use crate::simulate::{simulate, Seeds};
    use approx::assert_relative_eq;

    fn lti(a: f64, b: f64, k: f64, d: f64, f: f64) -> GlssModel {
        GlssModel::new(
            vec![LetterMatrices {
                a: DMatrix::from_element(1, 1, a),
                b: DMatrix::from_element(1, 1, b),
                k: DMatrix::from_element(1, 1, k),
            }],
            DMatrix::from_element(1, 1, 1.0),
            DMatrix::from_element(1, 1, d),
            DMatrix::from_element(1, 1, f),
            SwitchingSpec::discrete_iid(vec![1.0]).unwrap(),
            NoiseLaw::constant(DMatrix::identity(1, 1), DMatrix::identity(1, 1)),
        )
        .unwrap()
    }

    #[test]
    fn lti_series_matches_convolution() {
        let m = lti(0.6, 1.5, 0.7, 0.4, 1.0);
        let tr = simulate(&m, 300, Some(50), Seeds::default()).unwrap();
        let n = 6;
        let dec = decompose_series(&m, &tr, n).unwrap();
        for t in n..300 {
            let mut conv = 0.4 * tr.u[(0, t)];
            for k in 1..=n {
                conv += 0.6f64.powi(k as i32 - 1) * 1.5 * tr.u[(0, t - k)];
            }
            assert_relative_eq!(dec.y_d[(0, t)], conv, epsilon = 1e-10);
        }
    }

    #[test]
    fn no_noise_gain_means_no_stochastic_state() {
        let mut m = lti(0.5, 1.0, 0.0, 0.0, 1.0);
        m.noise.v_factors[0] = DMatrix::zeros(1, 1);
        let tr = simulate(&m, 200, Some(50), Seeds::default()).unwrap();
        let dec = decompose_series(&m, &tr, 8).unwrap();
        assert_eq!(dec.y_s.columns(8, 192).amax(), 0.0);
        // the remainder is the truncated state term C A^N x(t − N)
        for t in 8..200 {
            let tail = 0.5f64.powi(8) * tr.x[(0, t - 8)];
            assert_relative_eq!(tr.y[(0, t)] - dec.y_d[(0, t)], tail, epsilon = 1e-10);
        }
    }

    #[test]
    fn no_input_path_means_no_deterministic_part() {
        let m = lti(0.5, 0.0, 1.0, 0.0, 1.0);
        let tr = simulate(&m, 200, Some(50), Seeds::default()).unwrap();
        let dec = decompose_series(&m, &tr, 8).unwrap();
        assert_eq!(dec.y_d.amax(), 0.0);
    }

    #[test]
    fn feedthrough_only_projection_recovers_d() {
        let mut m = lti(0.0, 0.0, 0.0, 1.0, 0.0);
        m.f.fill(0.0);
        let tr = simulate(&m, 2_000, Some(5), Seeds::default()).unwrap();
        let dec = decompose_projection(&tr.y, &tr.u, &tr.pi, &m.switching, 2, None).unwrap();
        let coef = dec.coef.unwrap();
        assert_relative_eq!(coef[(0, 0)], 1.0, epsilon = 1e-6);
        assert!(coef.rows(1, 2).amax() < 1e-6);
        let add = (&tr.y - &dec.y_d - &dec.y_s)
            .columns(dec.valid_from, 2_000 - dec.valid_from)
            .amax();
        assert_eq!(add, 0.0);
    }

    #[test]
    fn projection_window_precondition() {
        let m = lti(0.5, 1.0, 1.0, 0.0, 1.0);
        let tr = simulate(&m, 30, Some(5), Seeds::default()).unwrap();
        assert!(matches!(
            decompose_projection(&tr.y, &tr.u, &tr.pi, &m.switching, 4, None),
            Err(GlssError::Window(_))
        ));
    }

    #[test]
    fn corrupted_noise_fails_orthogonality() {
        let m = lti(0.5, 1.0, 1.0, 0.2, 1.0);
        let mut tr = simulate(&m, 20_000, None, Seeds::default()).unwrap();
        let good = verify_theorem1(&m, &tr, Theorem1Options::default()).unwrap();
        assert!(good.report.passed(), "{}", good.report);
        tr.v = tr.u.clone();
        let bad = verify_theorem1(&m, &tr, Theorem1Options::default()).unwrap();
        assert!(bad.report.failures().any(|c| c.name.starts_with("orth v")));
    }
}
