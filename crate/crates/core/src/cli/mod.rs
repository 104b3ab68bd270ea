//! Command-line front end: `glss <command> --model FILE [options]`.
//!
//! Exit codes: 0 success (including a "not minimal" verdict), 1 numerical
//! failure, 2 invalid input or usage, 3 unstable model, 4 statistical
//! failure, 5 no isomorphism.

mod plot;

use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use nalgebra::DMatrix;
use serde::Serialize;
use serde_json::{json, Value};
use sha2::{Digest, Sha256};

use crate::decompose::{verify_theorem1, Theorem1Options};
use crate::error::GlssError;
use crate::innovation::{build_innovation_form, estimate_innovation, output_covariances};
use crate::io;
use crate::linalg;
use crate::model::{solve_stationary_gramian, validate_sglss, GlssModel};
use crate::realize::{self, DEFAULT_RANK_TOL};
use crate::report::ValidationReport;
use crate::simulate::{self, whiteness_report, Seeds, Trajectory};
use crate::stats;
use crate::switching::{sample_switching, validate_admissibility};

pub const EXIT_OK: i32 = 0;
pub const EXIT_NUMERICAL: i32 = 1;
pub const EXIT_INVALID: i32 = 2;
pub const EXIT_UNSTABLE: i32 = 3;
pub const EXIT_STATISTICAL: i32 = 4;
pub const EXIT_NO_ISOMORPHISM: i32 = 5;

pub const DEFAULT_HORIZON: usize = 10_000;
pub const DEFAULT_DEPTH: usize = 4;
pub const DEFAULT_OUT: &str = "glss-out";
/// Depth of the series decomposition that supplies `y^s` to `innovate`.
const INNOVATE_SERIES_DEPTH: usize = 16;
const GRAMIAN_TOL: f64 = 1e-12;
const EQUIVALENCE_TOL: f64 = 1e-6;
const PASS_FRACTION: f64 = 0.95;

#[derive(Debug, Parser)]
#[command(name = "glss", version, about = "Stochastic generalized linear switched systems")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Simulate a trajectory and compare its moments with the Gramian.
    Simulate(Options),
    /// Split the output into input-driven and noise-driven parts.
    Decompose(Options),
    /// Build the innovation form and check whiteness and equivalence.
    Innovate(Options),
    /// Rank test of the observability and reachability matrices.
    CheckMinimal(Options),
    /// Search for a basis change between `--model` and `--other`.
    Match(Options),
    /// Statistical admissibility test of the switching process.
    ValidateSwitching(Options),
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Simulate(_) => "simulate",
            Command::Decompose(_) => "decompose",
            Command::Innovate(_) => "innovate",
            Command::CheckMinimal(_) => "check-minimal",
            Command::Match(_) => "match",
            Command::ValidateSwitching(_) => "validate-switching",
        }
    }

    pub fn options(&self) -> &Options {
        match self {
            Command::Simulate(o)
            | Command::Decompose(o)
            | Command::Innovate(o)
            | Command::CheckMinimal(o)
            | Command::Match(o)
            | Command::ValidateSwitching(o) => o,
        }
    }
}

#[derive(Clone, Debug, Args)]
pub struct Options {
    /// Model file (JSON).
    #[arg(long)]
    pub model: PathBuf,
    /// Second model file, for `match`.
    #[arg(long)]
    pub other: Option<PathBuf>,
    /// Trajectory file (`.bin` binary, otherwise CSV); simulated when absent.
    #[arg(long)]
    pub trajectory: Option<PathBuf>,
    #[arg(long, default_value_t = DEFAULT_HORIZON)]
    pub horizon: usize,
    /// Burn-in; derived from the stability radius when absent.
    #[arg(long)]
    pub burn_in: Option<usize>,
    /// Word depth N.
    #[arg(long, default_value_t = DEFAULT_DEPTH)]
    pub depth: usize,
    /// Ridge for the regressions; scale-aware default when absent.
    #[arg(long)]
    pub ridge: Option<f64>,
    #[arg(long, default_value_t = 1)]
    pub seed_switch: u64,
    #[arg(long, default_value_t = 2)]
    pub seed_input: u64,
    #[arg(long, default_value_t = 3)]
    pub seed_noise: u64,
    #[arg(long, default_value = DEFAULT_OUT)]
    pub out: PathBuf,
    /// Numerical tolerance: series/projection distance (decompose),
    /// Riccati stop (innovate), rank (check-minimal), residual (match).
    #[arg(long)]
    pub tolerance: Option<f64>,
    /// z-score threshold of the statistical checks.
    #[arg(long, default_value_t = 5.0)]
    pub z_threshold: f64,
}

impl Options {
    fn seeds(&self) -> Seeds {
        Seeds {
            switching: self.seed_switch,
            input: self.seed_input,
            noise: self.seed_noise,
        }
    }
}

/// Hashed experiment configuration. File inputs enter through the hash of
/// their content, not their path.
#[derive(Debug, Serialize)]
struct ExperimentConfig<'a> {
    command: &'a str,
    model_sha256: String,
    other_sha256: Option<String>,
    trajectory_sha256: Option<String>,
    horizon: usize,
    burn_in: Option<usize>,
    depth: usize,
    ridge: Option<f64>,
    tolerance: Option<f64>,
    z_threshold: f64,
    seeds: Seeds,
}

/// A failure with its exit code; the message is printed to stderr.
#[derive(Debug)]
struct Failure {
    code: i32,
    message: String,
}

impl From<GlssError> for Failure {
    fn from(e: GlssError) -> Self {
        Failure {
            code: exit_code(&e),
            message: e.to_string(),
        }
    }
}

/// Exit code for a library error.
pub fn exit_code(e: &GlssError) -> i32 {
    match e {
        GlssError::Unstable { .. } => EXIT_UNSTABLE,
        GlssError::Convergence { .. } | GlssError::SingularRegression { .. } => EXIT_NUMERICAL,
        _ => EXIT_INVALID,
    }
}

/// Parses `args` (including the program name), runs the command and
/// returns the exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return e.exit_code();
        }
    };
    configure_threads();
    match execute(&cli.command) {
        Ok(code) => code,
        Err(f) => {
            eprintln!("error: {}", f.message);
            f.code
        }
    }
}

/// Sizes the global worker pool from `GLSS_THREADS`.
fn configure_threads() {
    if let Some(n) = std::env::var("GLSS_THREADS")
        .ok()
        .and_then(|s| s.trim().parse::<usize>().ok())
    {
        if n > 0 {
            let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
        }
    }
}

fn execute(cmd: &Command) -> Result<i32, Failure> {
    let opts = cmd.options();
    if opts.depth == 0 {
        return Err(Failure {
            code: EXIT_INVALID,
            message: "--depth: must be positive".into(),
        });
    }
    fs::create_dir_all(&opts.out).map_err(|e| Failure {
        code: EXIT_INVALID,
        message: format!("{}: {e}", opts.out.display()),
    })?;
    match cmd {
        Command::Simulate(o) => cmd_simulate(o),
        Command::Decompose(o) => cmd_decompose(o),
        Command::Innovate(o) => cmd_innovate(o),
        Command::CheckMinimal(o) => cmd_check_minimal(o),
        Command::Match(o) => cmd_match(o),
        Command::ValidateSwitching(o) => cmd_validate_switching(o),
    }
}

fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

fn config_for(command: &str, opts: &Options, model: &GlssModel, other: Option<&GlssModel>) -> Result<Value, Failure> {
    let trajectory_sha256 = match &opts.trajectory {
        Some(p) => Some(sha256_hex(&fs::read(p).map_err(GlssError::from)?)),
        None => None,
    };
    let config = ExperimentConfig {
        command,
        model_sha256: sha256_hex(io::model_to_json(model).as_bytes()),
        other_sha256: other.map(|m| sha256_hex(io::model_to_json(m).as_bytes())),
        trajectory_sha256,
        horizon: opts.horizon,
        burn_in: opts.burn_in,
        depth: opts.depth,
        ridge: opts.ridge,
        tolerance: opts.tolerance,
        z_threshold: opts.z_threshold,
        seeds: opts.seeds(),
    };
    Ok(serde_json::to_value(&config).expect("config serializes"))
}

/// Report document: config, its hash, the seed triple and the result.
fn write_report(opts: &Options, command: &str, config: Value, result: Value) -> Result<PathBuf, Failure> {
    let hash = sha256_hex(config.to_string().as_bytes());
    let doc = json!({
        "command": command,
        "config_hash": hash,
        "seeds": config["seeds"].clone(),
        "config": config,
        "result": result,
    });
    let path = opts.out.join(format!("{command}.json"));
    let text = serde_json::to_string_pretty(&doc).expect("report serializes") + "\n";
    fs::write(&path, text).map_err(GlssError::from)?;
    Ok(path)
}

fn rows(m: &DMatrix<f64>) -> Vec<Vec<f64>> {
    m.row_iter().map(|r| r.iter().copied().collect()).collect()
}

fn report_value(r: &ValidationReport) -> Value {
    json!({ "title": r.title, "passed": r.passed(), "checks": r.checks })
}

fn print_failures(r: &ValidationReport) {
    for c in r.failures() {
        eprintln!(
            "  FAIL {}: {:.4e} vs {:.4e}{}",
            c.name,
            c.statistic,
            c.threshold,
            c.detail.as_deref().map(|d| format!(" ({d})")).unwrap_or_default()
        );
    }
}

/// Reads a model and checks it is a stationary GLSS: exit 3 when the
/// stability condition fails, exit 2 with the report for anything else.
fn load_valid_model(path: &Path) -> Result<GlssModel, Failure> {
    let model = io::read_model(path)?;
    model.require_stable()?;
    let report = validate_sglss(&model);
    if !report.passed() {
        eprintln!("{}: not a stationary GLSS", path.display());
        print_failures(&report);
        let failed: Vec<&str> = report.failures().map(|c| c.name.as_str()).collect();
        return Err(Failure {
            code: EXIT_INVALID,
            message: format!("{}: model validation failed: {}", path.display(), failed.join(", ")),
        });
    }
    Ok(model)
}

fn trajectory_for(opts: &Options, model: &GlssModel) -> Result<Trajectory, Failure> {
    let traj = match &opts.trajectory {
        Some(p) => io::read_trajectory(p)?,
        None => simulate::simulate(model, opts.horizon, opts.burn_in, opts.seeds())?,
    };
    let d = model.dims;
    let checks = [
        ("u", traj.u.nrows(), d.nu),
        ("pi", traj.pi.nrows(), model.letter_count()),
        ("y", traj.y.nrows(), d.ny),
    ];
    for (name, got, want) in checks {
        if got != want {
            return Err(Failure {
                code: EXIT_INVALID,
                message: format!("trajectory.{name}: {got} rows, model expects {want}"),
            });
        }
    }
    Ok(traj)
}

fn cmd_simulate(opts: &Options) -> Result<i32, Failure> {
    let model = load_valid_model(&opts.model)?;
    let config = config_for("simulate", opts, &model, None)?;
    let rho = model.stability_radius()?;
    let traj = simulate::simulate(&model, opts.horizon, opts.burn_in, opts.seeds())?;
    let csv_path = opts.out.join("trajectory.csv");
    let bin_path = opts.out.join("trajectory.bin");
    io::write_trajectory_csv(&csv_path, &traj)?;
    io::write_trajectory_bin(&bin_path, &traj)?;

    let gramian = solve_stationary_gramian(&model, GRAMIAN_TOL)?;
    let horizon = traj.len();
    let state = stats::second_moment(&traj.x, &traj.x, 0..horizon)?;
    let output = stats::second_moment(&traj.y, &traj.y, 0..horizon)?;
    let gap = (&state.mean - &gramian.total).norm();
    let result = json!({
        "stability_radius": rho,
        "burn_in": traj.burn_in,
        "horizon": horizon,
        "gramian_trace": gramian.total.trace(),
        "gramian_iterations": gramian.iterations,
        "empirical_state_trace": state.mean.trace(),
        "state_moment_gap": gap,
        "state_moment_gap_sqrt_t": gap * (horizon as f64).sqrt(),
        "empirical_output_trace": output.mean.trace(),
        "files": ["trajectory.csv", "trajectory.bin"],
    });
    write_report(opts, "simulate", config, result)?;
    println!("stability radius   {rho:.6}");
    println!("gramian trace      {:.6}", gramian.total.trace());
    println!(
        "empirical E[x x'] trace {:.6} (gap {gap:.3e} in Frobenius norm)",
        state.mean.trace()
    );
    println!("empirical E[y y'] trace {:.6}", output.mean.trace());
    println!("wrote {} and {}", csv_path.display(), bin_path.display());
    Ok(EXIT_OK)
}

fn cmd_decompose(opts: &Options) -> Result<i32, Failure> {
    let model = load_valid_model(&opts.model)?;
    let config = config_for("decompose", opts, &model, None)?;
    let traj = trajectory_for(opts, &model)?;
    if traj.v.nrows() != model.dims.nn || traj.v.ncols() != traj.len() {
        return Err(Failure {
            code: EXIT_INVALID,
            message: "trajectory.v: the series decomposition needs the noise samples".into(),
        });
    }
    let mut th = Theorem1Options {
        depth: opts.depth,
        ridge: opts.ridge,
        z_tolerance: opts.z_threshold,
        ..Theorem1Options::default()
    };
    if let Some(t) = opts.tolerance {
        th.distance_tolerance = t;
    }
    let outcome = verify_theorem1(&model, &traj, th)?;
    let (series, projection) = (&outcome.series, &outcome.projection);
    let x_d = series.x_d.as_ref().expect("series states");
    let x_s = series.x_s.as_ref().expect("series states");
    let path = opts.out.join("decomposition.csv");
    let file = fs::File::create(&path).map_err(GlssError::from)?;
    io::write_csv(
        std::io::BufWriter::new(file),
        &[
            ("y_d", &projection.y_d),
            ("y_s", &projection.y_s),
            ("x_d", x_d),
            ("x_s", x_s),
            ("y_d_series", &series.y_d),
            ("y_s_series", &series.y_s),
        ],
    )?;

    let window = opts.depth..traj.len();
    let y_rms = stats::rms(&traj.y, window.clone());
    let y_s_series_rms = stats::rms(&series.y_s, window.clone());
    let y_s_projection_rms = stats::rms(&projection.y_s, window.clone());
    let distance = outcome
        .report
        .find("distance y_d series/projection")
        .map(|c| c.statistic);
    let passed = outcome.report.passed();
    let result = json!({
        "passed": passed,
        "depth": opts.depth,
        "valid_from": projection.valid_from,
        "y_rms": y_rms,
        "y_d_rms": stats::rms(&projection.y_d, window.clone()),
        "y_s_rms": y_s_projection_rms,
        "y_s_series_rms": y_s_series_rms,
        "series_tail_rms": series.tail_rms,
        "series_projection_distance": distance,
        "report": report_value(&outcome.report),
        "files": ["decomposition.csv"],
    });
    write_report(opts, "decompose", config, result)?;
    println!("y rms {y_rms:.6}, y_s rms {y_s_projection_rms:.6} (projection), {y_s_series_rms:.6} (series)");
    if let Some(d) = distance {
        println!("series/projection distance {:.3}% of rms(y)", 100.0 * d);
    }
    println!(
        "checks passed {}/{}",
        outcome.report.checks.iter().filter(|c| c.passed).count(),
        outcome.report.checks.len()
    );
    if passed {
        Ok(EXIT_OK)
    } else {
        print_failures(&outcome.report);
        Ok(EXIT_STATISTICAL)
    }
}

fn cmd_innovate(opts: &Options) -> Result<i32, Failure> {
    let model = load_valid_model(&opts.model)?;
    let config = config_for("innovate", opts, &model, None)?;
    let tol = opts.tolerance.unwrap_or(GRAMIAN_TOL);
    let form = build_innovation_form(&model, tol)?;
    io::write_model(&opts.out.join("innovation_model.json"), &form.model)?;

    // equivalence: both realizations imply the same output covariances
    let depth = opts.depth;
    let original = output_covariances(&model, depth, tol)?;
    let innovation = output_covariances(&form.model, depth, tol)?;
    let equivalence_gap = original
        .iter()
        .zip(&innovation)
        .map(|((_, a), (_, b))| (a - b).norm() / a.norm().max(1.0))
        .fold(0.0, f64::max);

    // whiteness of the estimated innovation jointly with the input
    let traj = trajectory_for(opts, &model)?;
    if traj.v.nrows() != model.dims.nn || traj.v.ncols() != traj.len() {
        return Err(Failure {
            code: EXIT_INVALID,
            message: "trajectory.v: the innovation estimate needs the noise samples".into(),
        });
    }
    let spec = &model.switching;
    let dec = crate::decompose::decompose_series(&model, &traj, INNOVATE_SERIES_DEPTH.max(depth))?;
    let est = estimate_innovation(&dec.y_s, &traj.pi, spec, depth, opts.ridge, dec.valid_from)?;
    let from = est.valid_from;
    let n = traj.len().saturating_sub(from);
    let joint = linalg::vstack(&[
        est.e.columns(from, n).into_owned(),
        traj.u.columns(from, n).into_owned(),
    ]);
    let pi = traj.pi.columns(from, n).into_owned();
    let white = whiteness_report(&joint, &pi, spec, depth.max(2), opts.z_threshold)?;
    let white_fraction = white.pass_fraction("white[");
    let equal_fraction = white.pass_fraction("equal[");
    let nonsingular = white.pass_fraction("nonsingular[") == 1.0;
    let statistical_pass = white_fraction >= PASS_FRACTION && equal_fraction >= PASS_FRACTION && nonsingular;
    let equivalent = equivalence_gap <= EQUIVALENCE_TOL;

    let e_path = opts.out.join("innovation.csv");
    let file = fs::File::create(&e_path).map_err(GlssError::from)?;
    io::write_csv(std::io::BufWriter::new(file), &[("e", &est.e)])?;
    plot::emit(
        &opts.out,
        "residual_variance",
        "innovation residual variance",
        "depth N",
        "trace E[e e']",
        &[plot::Series {
            label: "residual variance",
            values: &est.residual_variance,
        }],
    )?;

    let result = json!({
        "passed": statistical_pass && equivalent,
        "closed_loop_radius": form.closed_loop_radius,
        "riccati_iterations": form.iterations,
        "gains": form.gains.iter().map(rows).collect::<Vec<_>>(),
        "lambda": form.lambda.iter().map(rows).collect::<Vec<_>>(),
        "error_gramians": form.error_gramians.iter().map(rows).collect::<Vec<_>>(),
        "equivalence": {
            "max_relative_gap": equivalence_gap,
            "threshold": EQUIVALENCE_TOL,
            "passed": equivalent,
        },
        "whiteness": {
            "white_pair_fraction": white_fraction,
            "equal_fraction": equal_fraction,
            "nonsingular": nonsingular,
            "required_fraction": PASS_FRACTION,
            "passed": statistical_pass,
            "report": report_value(&white),
        },
        "residual_variance": est.residual_variance,
        "files": ["innovation_model.json", "innovation.csv", "residual_variance.svg", "residual_variance.csv"],
    });
    write_report(opts, "innovate", config, result)?;
    println!(
        "closed-loop radius {:.6} after {} Riccati iterations",
        form.closed_loop_radius, form.iterations
    );
    println!("output covariance gap {equivalence_gap:.3e} (<= {EQUIVALENCE_TOL:e})");
    println!(
        "white word pairs {:.1}%, equal moments {:.1}%, nonsingular {}",
        100.0 * white_fraction,
        100.0 * equal_fraction,
        nonsingular
    );
    if !equivalent {
        return Err(Failure {
            code: EXIT_NUMERICAL,
            message: format!("innovation form is not output-equivalent (gap {equivalence_gap:.3e})"),
        });
    }
    Ok(if statistical_pass { EXIT_OK } else { EXIT_STATISTICAL })
}

fn cmd_check_minimal(opts: &Options) -> Result<i32, Failure> {
    let model = load_valid_model(&opts.model)?;
    let config = config_for("check-minimal", opts, &model, None)?;
    let report = realize::check_minimality(&model, opts.tolerance.unwrap_or(DEFAULT_RANK_TOL))?;
    plot::emit(
        &opts.out,
        "singular_values",
        "singular value spectra",
        "index",
        "singular value",
        &[
            plot::Series {
                label: "observability",
                values: &report.observability_singular_values,
            },
            plot::Series {
                label: "reachability",
                values: &report.reachability_singular_values,
            },
        ],
    )?;
    let verdict = if report.minimal { "minimal" } else { "not minimal" };
    let mut result = serde_json::to_value(&report).expect("rank report serializes");
    result["verdict"] = json!(verdict);
    write_report(opts, "check-minimal", config, result)?;
    println!(
        "{verdict}: nx = {}, observability rank {}, reachability rank {}",
        report.nx, report.observability_rank, report.reachability_rank
    );
    Ok(EXIT_OK)
}

fn cmd_match(opts: &Options) -> Result<i32, Failure> {
    let other_path = opts.other.as_ref().ok_or_else(|| Failure {
        code: EXIT_INVALID,
        message: "--other: match needs a second model file".into(),
    })?;
    let model = load_valid_model(&opts.model)?;
    let other = load_valid_model(other_path)?;
    let config = config_for("match", opts, &model, Some(&other))?;
    let tol = opts.tolerance.unwrap_or(1e-6);
    let result = match realize::find_isomorphism(&model, &other, tol) {
        Ok(iso) => iso,
        Err(GlssError::Hypothesis(reason)) => {
            let result = json!({ "found": false, "reason": reason });
            write_report(opts, "match", config, result)?;
            println!("no isomorphism: {reason}");
            return Ok(EXIT_NO_ISOMORPHISM);
        }
        Err(e) => return Err(e.into()),
    };
    let mut value = serde_json::to_value(&result).expect("isomorphism serializes");
    value["t"] = json!(result.t.as_ref().map(rows));
    value["max_residual"] = json!(result.max_residual());
    write_report(opts, "match", config, value)?;
    if result.found {
        println!(
            "isomorphism found: cond(T) {:.3e}, max residual {:.3e}",
            result.condition_number,
            result.max_residual()
        );
        Ok(EXIT_OK)
    } else {
        println!("no isomorphism: max residual {:.3e} > {tol:e}", result.max_residual());
        Ok(EXIT_NO_ISOMORPHISM)
    }
}

fn cmd_validate_switching(opts: &Options) -> Result<i32, Failure> {
    // only the switching part of the model is needed
    let model = io::read_model(&opts.model)?;
    let config = config_for("validate-switching", opts, &model, None)?;
    let spec = &model.switching;
    let samples = match &opts.trajectory {
        Some(p) => io::read_trajectory(p)?.pi,
        None => sample_switching(spec, opts.horizon, opts.seed_switch)?,
    };
    let report = validate_admissibility(&samples, spec, opts.depth, opts.z_threshold)?;
    let passed = report.passed();
    let result = json!({
        "passed": passed,
        "kind": spec.kind_name(),
        "samples": samples.ncols(),
        "report": report_value(&report),
    });
    write_report(opts, "validate-switching", config, result)?;
    println!(
        "{} switching: {}/{} checks passed",
        spec.kind_name(),
        report.checks.iter().filter(|c| c.passed).count(),
        report.checks.len()
    );
    if passed {
        Ok(EXIT_OK)
    } else {
        print_failures(&report);
        Ok(EXIT_STATISTICAL)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exit_codes_follow_the_contract() {
        assert_eq!(exit_code(&GlssError::Unstable { rho: 1.2 }), EXIT_UNSTABLE);
        assert_eq!(exit_code(&GlssError::format("dims.nx", "bad")), EXIT_INVALID);
        assert_eq!(
            exit_code(&GlssError::Convergence {
                iterations: 1,
                residual: 1.0
            }),
            EXIT_NUMERICAL
        );
    }

    #[test]
    fn usage_errors_exit_two() {
        assert_eq!(run(["glss", "simulate"]), 2);
        assert_eq!(run(["glss", "frobnicate", "--model", "m.json"]), 2);
    }

    #[test]
    fn sha256_matches_known_digest() {
        assert_eq!(
            sha256_hex(b"abc"),
            "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad"
        );
    }

    #[test]
    fn parses_all_documented_flags() {
        let cli = Cli::try_parse_from([
            "glss",
            "decompose",
            "--model",
            "m.json",
            "--trajectory",
            "t.bin",
            "--horizon",
            "500",
            "--depth",
            "3",
            "--ridge",
            "0.1",
            "--seed-switch",
            "7",
            "--seed-input",
            "8",
            "--seed-noise",
            "9",
            "--out",
            "o",
            "--tolerance",
            "0.01",
        ])
        .unwrap();
        let o = cli.command.options();
        assert_eq!(cli.command.name(), "decompose");
        assert_eq!(
            (o.horizon, o.depth, o.ridge, o.tolerance),
            (500, 3, Some(0.1), Some(0.01))
        );
        assert_eq!(
            o.seeds(),
            Seeds {
                switching: 7,
                input: 8,
                noise: 9
            }
        );
    }
}
