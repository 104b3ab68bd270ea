use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use glss::io::{read_model, read_trajectory, write_model, write_trajectory_csv, BINARY_MAGIC};
use glss::model::{Dims, GlssModel, LetterMatrices, NoiseLaw};
use glss::random::{random_basis, random_discrete_iid, random_markov};
use glss::realize::duplicate;
use glss::switching::SwitchingSpec;
use nalgebra::DMatrix;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde_json::Value;
use tempfile::TempDir;

fn fixture(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures").join(name)
}

fn glss(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_glss"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn run_in(dir: &Path, cmd: &str, model: &Path, extra: &[&str]) -> Output {
    let mut args = vec![cmd, "--model", model.to_str().unwrap(), "--out", dir.to_str().unwrap()];
    args.extend_from_slice(extra);
    glss(&args)
}

fn report(dir: &Path, cmd: &str) -> Value {
    serde_json::from_str(&fs::read_to_string(dir.join(format!("{cmd}.json"))).unwrap()).unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn save(dir: &Path, name: &str, m: &GlssModel) -> PathBuf {
    let p = dir.join(name);
    write_model(&p, m).unwrap();
    p
}

#[test]
fn simulate_writes_trajectory_files_and_summary() {
    let dir = TempDir::new().unwrap();
    let out = run_in(dir.path(), "simulate", &fixture("two_mode.json"), &[]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    let text = String::from_utf8_lossy(&out.stdout);
    assert!(text.contains("stability radius") && text.contains("gramian trace"));

    let bin = fs::read(dir.path().join("trajectory.bin")).unwrap();
    assert_eq!(&bin[..8], BINARY_MAGIC);
    let from_csv = read_trajectory(&dir.path().join("trajectory.csv")).unwrap();
    let from_bin = read_trajectory(&dir.path().join("trajectory.bin")).unwrap();
    assert_eq!(from_csv.len(), 10_000);
    assert_eq!(from_csv.y, from_bin.y);
    assert_eq!(from_csv.pi, from_bin.pi);

    let r = report(dir.path(), "simulate");
    assert_eq!(r["seeds"]["switching"], 1);
    assert_eq!(r["config_hash"].as_str().unwrap().len(), 64);
    let gap = r["result"]["state_moment_gap_sqrt_t"].as_f64().unwrap();
    assert!(gap < 10.0, "Gramian vs Monte Carlo gap {gap}/sqrt(T)");
}

#[test]
fn identical_configs_give_identical_bytes() {
    let (a, b) = (TempDir::new().unwrap(), TempDir::new().unwrap());
    let model = fixture("two_mode.json");
    let args = ["--horizon", "3000", "--seed-noise", "17"];
    assert_eq!(run_in(a.path(), "simulate", &model, &args).status.code(), Some(0));
    let out = Command::new(env!("CARGO_BIN_EXE_glss"))
        .env("GLSS_THREADS", "1")
        .args([
            "simulate",
            "--model",
            model.to_str().unwrap(),
            "--out",
            b.path().to_str().unwrap(),
        ])
        .args(args)
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0));
    for f in ["trajectory.csv", "trajectory.bin", "simulate.json"] {
        assert_eq!(
            fs::read(a.path().join(f)).unwrap(),
            fs::read(b.path().join(f)).unwrap(),
            "{f}"
        );
    }
    let c = TempDir::new().unwrap();
    run_in(
        c.path(),
        "simulate",
        &model,
        &["--horizon", "3000", "--seed-noise", "18"],
    );
    assert_ne!(
        report(a.path(), "simulate")["config_hash"],
        report(c.path(), "simulate")["config_hash"]
    );
}

#[test]
fn unstable_model_exits_three_and_names_the_condition() {
    let dir = TempDir::new().unwrap();
    let out = run_in(dir.path(), "simulate", &fixture("unstable.json"), &[]);
    assert_eq!(out.status.code(), Some(3));
    let err = stderr(&out);
    assert!(
        err.contains("1.200000") && err.contains("mean-square stability condition"),
        "{err}"
    );
}

#[test]
fn malformed_model_exits_two_with_field_path() {
    let dir = TempDir::new().unwrap();
    let out = run_in(dir.path(), "simulate", &fixture("malformed.json"), &[]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("C[0][1]"), "{}", stderr(&out));

    let mut doc: Value = serde_json::from_str(&fs::read_to_string(fixture("two_mode.json")).unwrap()).unwrap();
    doc["letters"][1]["A"] = serde_json::json!([[0.2, 0.0]]);
    let path = dir.path().join("short.json");
    fs::write(&path, doc.to_string()).unwrap();
    let out = run_in(dir.path(), "simulate", &path, &[]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("letters[1].A"), "{}", stderr(&out));
}

#[test]
fn invalid_model_exits_two_with_validation_report() {
    let dir = TempDir::new().unwrap();
    let mut doc: Value = serde_json::from_str(&fs::read_to_string(fixture("two_mode.json")).unwrap()).unwrap();
    doc["noise"]["Q_factors"] = serde_json::json!([[[0.0]]]);
    let path = dir.path().join("singular.json");
    fs::write(&path, doc.to_string()).unwrap();
    let out = run_in(dir.path(), "simulate", &path, &[]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("item1 Q_1"), "{}", stderr(&out));
}

#[test]
fn usage_errors_exit_two() {
    assert_eq!(glss(&["simulate"]).status.code(), Some(2));
    assert_eq!(
        glss(&["simulate", "--model", "x.json", "--horizon", "many"])
            .status
            .code(),
        Some(2)
    );
    let dir = TempDir::new().unwrap();
    let out = run_in(dir.path(), "match", &fixture("two_mode.json"), &[]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("--other"));
}

#[test]
fn decompose_passes_on_a_seeded_model() {
    let dir = TempDir::new().unwrap();
    let out = run_in(
        dir.path(),
        "decompose",
        &fixture("two_mode.json"),
        &["--horizon", "50000"],
    );
    assert_eq!(
        out.status.code(),
        Some(0),
        "{}{}",
        String::from_utf8_lossy(&out.stdout),
        stderr(&out)
    );
    let r = report(dir.path(), "decompose");
    assert_eq!(r["result"]["passed"], true);
    assert!(r["result"]["series_projection_distance"].as_f64().unwrap() <= 0.05);
    let csv = fs::read_to_string(dir.path().join("decomposition.csv")).unwrap();
    assert!(csv.starts_with("t,y_d_1,y_s_1,x_d_1,x_d_2,x_s_1,x_s_2,"));
}

#[test]
fn decompose_on_shuffled_switching_exits_four() {
    let dir = TempDir::new().unwrap();
    let model = fixture("two_mode.json");
    assert_eq!(
        run_in(dir.path(), "simulate", &model, &["--horizon", "50000"])
            .status
            .code(),
        Some(0)
    );
    let mut traj = read_trajectory(&dir.path().join("trajectory.bin")).unwrap();
    let mut order: Vec<usize> = (0..traj.len()).collect();
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(5));
    traj.pi = DMatrix::from_fn(traj.pi.nrows(), traj.len(), |r, c| traj.pi[(r, order[c])]);
    let shuffled = dir.path().join("shuffled.csv");
    write_trajectory_csv(&shuffled, &traj).unwrap();
    let out = run_in(
        dir.path(),
        "decompose",
        &model,
        &["--trajectory", shuffled.to_str().unwrap()],
    );
    assert_eq!(out.status.code(), Some(4), "{}", String::from_utf8_lossy(&out.stdout));
    assert_eq!(report(dir.path(), "decompose")["result"]["passed"], false);
}

#[test]
fn decompose_without_noise_reports_vanishing_stochastic_part() {
    let dir = TempDir::new().unwrap();
    let mut doc: Value = serde_json::from_str(&fs::read_to_string(fixture("two_mode.json")).unwrap()).unwrap();
    doc["dims"]["nn"] = 0.into();
    for l in doc["letters"].as_array_mut().unwrap() {
        l["K"] = serde_json::json!([[], []]);
    }
    doc["F"] = serde_json::json!([[]]);
    doc["noise"]["Q_factors"] = serde_json::json!([[]]);
    let path = dir.path().join("noiseless.json");
    fs::write(&path, doc.to_string()).unwrap();
    let out = run_in(dir.path(), "decompose", &path, &["--horizon", "20000", "--depth", "6"]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    let r = &report(dir.path(), "decompose")["result"];
    assert_eq!(r["y_s_series_rms"].as_f64().unwrap(), 0.0);
    let ratio = r["y_s_rms"].as_f64().unwrap() / r["y_rms"].as_f64().unwrap();
    assert!(ratio < 0.01, "projection residual {ratio}");
}

/// Stabilizing solution of the scalar filter Riccati equation
/// `Π = a²Π + k²q − (acΠ + kqf)² / (c²Π + f²q)`; its nonzero root is
/// `q((af − kc)² − f²) / c²`.
fn scalar_kalman(a: f64, c: f64, k: f64, f: f64, q: f64) -> (f64, f64) {
    let pi = (q * ((a * f - k * c).powi(2) - f * f) / (c * c)).max(0.0);
    let lambda = c * c * pi + f * f * q;
    ((a * c * pi + k * q * f) / lambda, lambda)
}

fn scalar_lti(a: f64, c: f64, k: f64, f: f64, q: f64) -> GlssModel {
    let m = |v: f64| DMatrix::from_element(1, 1, v);
    GlssModel::new(
        vec![LetterMatrices {
            a: m(a),
            b: m(1.0),
            k: m(k),
        }],
        m(c),
        m(0.3),
        m(f),
        SwitchingSpec::discrete_iid(vec![1.0]).unwrap(),
        NoiseLaw::constant(m(q.sqrt()), m(1.0)),
    )
    .unwrap()
}

#[test]
fn innovate_on_lti_matches_the_kalman_predictor() {
    for (a, c, k, f, q) in [
        (0.5, 1.0, 1.0, 0.3, 2.0),
        (-0.7, 2.0, 0.5, 1.0, 0.5),
        (0.9, 1.0, 0.2, 1.0, 1.0),
    ] {
        let dir = TempDir::new().unwrap();
        let path = save(dir.path(), "lti.json", &scalar_lti(a, c, k, f, q));
        let out = run_in(dir.path(), "innovate", &path, &["--horizon", "20000"]);
        assert_eq!(
            out.status.code(),
            Some(0),
            "{}{}",
            String::from_utf8_lossy(&out.stdout),
            stderr(&out)
        );
        let r = &report(dir.path(), "innovate")["result"];
        let (gain, lambda) = scalar_kalman(a, c, k, f, q);
        let got_gain = r["gains"][0][0][0].as_f64().unwrap();
        let got_lambda = r["lambda"][0][0][0].as_f64().unwrap();
        assert!(
            (got_gain - gain).abs() <= 1e-9 * gain.abs().max(1.0),
            "gain {got_gain} vs {gain}"
        );
        assert!(
            (got_lambda - lambda).abs() <= 1e-9 * lambda,
            "lambda {got_lambda} vs {lambda}"
        );

        let inn = read_model(&dir.path().join("innovation_model.json")).unwrap();
        assert!(inn.innovation);
        assert!((inn.letters[0].k[(0, 0)] - gain).abs() <= 1e-9 * gain.abs().max(1.0));
        assert!((inn.v_cov()[(0, 0)] - lambda).abs() <= 1e-9 * lambda);
        assert!(dir.path().join("residual_variance.svg").exists());
    }
}

#[test]
fn check_minimal_on_duplicated_model_reports_not_minimal() {
    let dir = TempDir::new().unwrap();
    let m = read_model(&fixture("two_mode.json")).unwrap();
    let out = run_in(dir.path(), "check-minimal", &fixture("two_mode.json"), &[]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(report(dir.path(), "check-minimal")["result"]["verdict"], "minimal");

    let path = save(dir.path(), "dup.json", &duplicate(&m).unwrap());
    let out = run_in(dir.path(), "check-minimal", &path, &[]);
    assert_eq!(out.status.code(), Some(0));
    assert!(String::from_utf8_lossy(&out.stdout).starts_with("not minimal"));
    let r = &report(dir.path(), "check-minimal")["result"];
    assert_eq!(r["verdict"], "not minimal");
    assert_eq!(r["nx"], 4);
    assert_eq!(r["observability_rank"], 2);
    let svg = fs::read_to_string(dir.path().join("singular_values.svg")).unwrap();
    assert!(svg.contains("observability") && svg.contains("reachability"));
}

#[test]
fn match_recovers_the_basis_change_of_a_roundtrip_pair() {
    let mut rng = ChaCha8Rng::seed_from_u64(41);
    let dims = Dims {
        nx: 2,
        nu: 1,
        ny: 2,
        nn: 2,
    };
    let s = random_discrete_iid(&mut rng, 2, dims, 0.5).unwrap();
    let t = random_basis(&mut rng, 2, 10.0);
    let s_hat = s.transformed(&t).unwrap();
    let dir = TempDir::new().unwrap();
    let a = save(dir.path(), "s.json", &s);
    let b = save(dir.path(), "s_hat.json", &s_hat);
    let out = run_in(dir.path(), "match", &a, &["--other", b.to_str().unwrap()]);
    assert_eq!(
        out.status.code(),
        Some(0),
        "{}{}",
        String::from_utf8_lossy(&out.stdout),
        stderr(&out)
    );
    let r = &report(dir.path(), "match")["result"];
    assert_eq!(r["found"], true);
    for i in 0..2 {
        for j in 0..2 {
            let got = r["t"][i][j].as_f64().unwrap();
            assert!(
                (got - t[(i, j)]).abs() <= 1e-8 * t.norm(),
                "T[{i}][{j}] {got} vs {}",
                t[(i, j)]
            );
        }
    }

    let mut other = s_hat.clone();
    other.c[(0, 0)] += 0.5;
    let c = save(dir.path(), "other.json", &other);
    let out = run_in(dir.path(), "match", &a, &["--other", c.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(5));
    assert_eq!(report(dir.path(), "match")["result"]["found"], false);
}

#[test]
fn validate_switching_accepts_generated_and_rejects_shuffled_markov_samples() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let m = random_markov(&mut rng, 2, 1, 1, 1, 1, 0.4).unwrap();
    let dir = TempDir::new().unwrap();
    let path = save(dir.path(), "markov.json", &m);
    let out = run_in(
        dir.path(),
        "validate-switching",
        &path,
        &["--horizon", "50000", "--depth", "3"],
    );
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    assert_eq!(
        report(dir.path(), "validate-switching")["result"]["kind"],
        "markov-embedded"
    );

    assert_eq!(
        run_in(dir.path(), "simulate", &path, &["--horizon", "50000"])
            .status
            .code(),
        Some(0)
    );
    let mut traj = read_trajectory(&dir.path().join("trajectory.bin")).unwrap();
    let mut order: Vec<usize> = (0..traj.len()).collect();
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(8));
    traj.pi = DMatrix::from_fn(traj.pi.nrows(), traj.len(), |r, c| traj.pi[(r, order[c])]);
    let shuffled = dir.path().join("shuffled.csv");
    write_trajectory_csv(&shuffled, &traj).unwrap();
    let out = run_in(
        dir.path(),
        "validate-switching",
        &path,
        &["--trajectory", shuffled.to_str().unwrap(), "--depth", "3"],
    );
    assert_eq!(out.status.code(), Some(4));
}
