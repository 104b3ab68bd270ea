//! C ABI for the glss library.
//!
//! Models and trajectories are opaque handles owned by the caller and
//! released with the matching `*_free` function. Every fallible function
//! returns a [`GlssStatus`]; on failure the message is available from
//! [`glss_last_error_message`] on the same thread.

use std::cell::RefCell;
use std::ffi::{c_char, c_int, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use glss::error::GlssError;
use glss::simulate::{Seeds, Trajectory};

/// Opaque model handle.
pub struct GlssModel(glss::model::GlssModel);

/// Opaque trajectory handle.
pub struct GlssTrajectory(Trajectory);

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum GlssStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    Format = 3,
    Unstable = 4,
    Numerical = 5,
    Hypothesis = 6,
    Io = 7,
    BufferTooSmall = 8,
    Panic = 9,
}

/// Trajectory signals addressable through the C API.
#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum GlssProcess {
    U = 0,
    Pi = 1,
    V = 2,
    X = 3,
    Y = 4,
}

#[repr(C)]
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct GlssDims {
    pub nx: usize,
    pub nu: usize,
    pub ny: usize,
    pub nn: usize,
    /// Number of letters of the switching alphabet.
    pub letters: usize,
}

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct GlssSeeds {
    pub switching: u64,
    pub input: u64,
    pub noise: u64,
}

#[repr(C)]
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct GlssRankSummary {
    pub nx: usize,
    pub observability_rank: usize,
    pub reachability_rank: usize,
    /// 1 when both ranks equal `nx`.
    pub minimal: c_int,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(message: impl Into<String>) {
    let text = message.into().replace('\0', " ");
    LAST_ERROR.with(|e| *e.borrow_mut() = CString::new(text).ok());
}

fn status_of(e: &GlssError) -> GlssStatus {
    match e {
        GlssError::Format { .. } => GlssStatus::Format,
        GlssError::Unstable { .. } => GlssStatus::Unstable,
        GlssError::Convergence { .. } | GlssError::SingularRegression { .. } => GlssStatus::Numerical,
        GlssError::Hypothesis(_) => GlssStatus::Hypothesis,
        GlssError::Io(_) => GlssStatus::Io,
        _ => GlssStatus::InvalidArgument,
    }
}

/// Runs `f`, recording its error message and converting panics.
fn guard<F: FnOnce() -> Result<(), (GlssStatus, String)>>(f: F) -> GlssStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            LAST_ERROR.with(|e| *e.borrow_mut() = None);
            GlssStatus::Ok
        }
        Ok(Err((status, message))) => {
            set_error(message);
            status
        }
        Err(_) => {
            set_error("internal panic");
            GlssStatus::Panic
        }
    }
}

fn lib<T>(r: glss::Result<T>) -> Result<T, (GlssStatus, String)> {
    r.map_err(|e| (status_of(&e), e.to_string()))
}

fn null(what: &str) -> (GlssStatus, String) {
    (GlssStatus::NullPointer, format!("{what} is null"))
}

unsafe fn model_ref<'a>(m: *const GlssModel) -> Result<&'a glss::model::GlssModel, (GlssStatus, String)> {
    m.as_ref().map(|h| &h.0).ok_or_else(|| null("model"))
}

unsafe fn out_ref<'a, T>(p: *mut T, what: &str) -> Result<&'a mut T, (GlssStatus, String)> {
    p.as_mut().ok_or_else(|| null(what))
}

/// Message of the last failed call on this thread, or null. The pointer
/// stays valid until the next call into the library on this thread.
#[no_mangle]
pub extern "C" fn glss_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |s| s.as_ptr()))
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn glss_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Parses a model document.
///
/// # Safety
/// `json` must be a NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn glss_model_from_json(json: *const c_char, out: *mut *mut GlssModel) -> GlssStatus {
    guard(|| {
        let out = out_ref(out, "out")?;
        if json.is_null() {
            return Err(null("json"));
        }
        let text = CStr::from_ptr(json)
            .to_str()
            .map_err(|e| (GlssStatus::InvalidArgument, format!("json is not UTF-8: {e}")))?;
        let model = lib(glss::io::model_from_json(text))?;
        *out = Box::into_raw(Box::new(GlssModel(model)));
        Ok(())
    })
}

/// Serializes a model; free the result with [`glss_string_free`].
///
/// # Safety
/// `model` must be a live handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn glss_model_to_json(model: *const GlssModel, out: *mut *mut c_char) -> GlssStatus {
    guard(|| {
        let m = model_ref(model)?;
        let out = out_ref(out, "out")?;
        let text = CString::new(glss::io::model_to_json(m)).expect("JSON has no NUL bytes");
        *out = text.into_raw();
        Ok(())
    })
}

/// # Safety
/// `s` must come from this library or be null.
#[no_mangle]
pub unsafe extern "C" fn glss_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// # Safety
/// `model` must come from this library or be null; it is invalid afterwards.
#[no_mangle]
pub unsafe extern "C" fn glss_model_free(model: *mut GlssModel) {
    if !model.is_null() {
        drop(Box::from_raw(model));
    }
}

/// # Safety
/// `model` must be a live handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn glss_model_dims(model: *const GlssModel, out: *mut GlssDims) -> GlssStatus {
    guard(|| {
        let m = model_ref(model)?;
        *out_ref(out, "out")? = GlssDims {
            nx: m.dims.nx,
            nu: m.dims.nu,
            ny: m.dims.ny,
            nn: m.dims.nn,
            letters: m.letter_count(),
        };
        Ok(())
    })
}

/// Spectral radius of `Σ_σ p_σ A_σ ⊗ A_σ`.
///
/// # Safety
/// `model` must be a live handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn glss_model_stability_radius(model: *const GlssModel, out: *mut f64) -> GlssStatus {
    guard(|| {
        let m = model_ref(model)?;
        *out_ref(out, "out")? = lib(m.stability_radius())?;
        Ok(())
    })
}

/// Sets `*passed` to 1 when the model is a stationary GLSS, else 0. The
/// names of the failing checks are left in the last-error message.
///
/// # Safety
/// `model` must be a live handle and `passed` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn glss_model_validate(model: *const GlssModel, passed: *mut c_int) -> GlssStatus {
    let mut failed = String::new();
    let status = guard(|| {
        let m = model_ref(model)?;
        let passed = out_ref(passed, "passed")?;
        let report = glss::model::validate_sglss(m);
        *passed = report.passed() as c_int;
        failed = report
            .failures()
            .map(|c| c.name.as_str())
            .collect::<Vec<_>>()
            .join(", ");
        Ok(())
    });
    if status == GlssStatus::Ok && !failed.is_empty() {
        set_error(format!("failed checks: {failed}"));
    }
    status
}

/// Simulates `horizon` samples. A negative `burn_in` selects the default
/// derived from the stability radius.
///
/// # Safety
/// `model` must be a live handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn glss_simulate(
    model: *const GlssModel,
    horizon: usize,
    burn_in: i64,
    seeds: GlssSeeds,
    out: *mut *mut GlssTrajectory,
) -> GlssStatus {
    guard(|| {
        let m = model_ref(model)?;
        let out = out_ref(out, "out")?;
        let burn = usize::try_from(burn_in).ok();
        let seeds = Seeds {
            switching: seeds.switching,
            input: seeds.input,
            noise: seeds.noise,
        };
        let traj = lib(glss::simulate::simulate(m, horizon, burn, seeds))?;
        *out = Box::into_raw(Box::new(GlssTrajectory(traj)));
        Ok(())
    })
}

/// Number of samples.
///
/// # Safety
/// `traj` must be a live handle or null (which yields 0).
#[no_mangle]
pub unsafe extern "C" fn glss_trajectory_len(traj: *const GlssTrajectory) -> usize {
    traj.as_ref().map_or(0, |t| t.0.len())
}

fn process(t: &Trajectory, which: GlssProcess) -> &nalgebra::DMatrix<f64> {
    match which {
        GlssProcess::U => &t.u,
        GlssProcess::Pi => &t.pi,
        GlssProcess::V => &t.v,
        GlssProcess::X => &t.x,
        GlssProcess::Y => &t.y,
    }
}

/// Rows (signal dimension) of one process.
///
/// # Safety
/// `traj` must be a live handle and `rows` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn glss_trajectory_rows(
    traj: *const GlssTrajectory,
    which: GlssProcess,
    rows: *mut usize,
) -> GlssStatus {
    guard(|| {
        let t = traj.as_ref().ok_or_else(|| null("trajectory"))?;
        *out_ref(rows, "rows")? = process(&t.0, which).nrows();
        Ok(())
    })
}

/// Copies one process into `buf`, sample by sample:
/// `buf[t * rows + i]` is component `i` at time `t`. `len` must be at
/// least `rows * glss_trajectory_len(traj)`.
///
/// # Safety
/// `traj` must be a live handle and `buf` valid for `len` writes.
#[no_mangle]
pub unsafe extern "C" fn glss_trajectory_copy(
    traj: *const GlssTrajectory,
    which: GlssProcess,
    buf: *mut f64,
    len: usize,
) -> GlssStatus {
    guard(|| {
        let t = traj.as_ref().ok_or_else(|| null("trajectory"))?;
        let m = process(&t.0, which);
        let data = m.as_slice();
        if len < data.len() {
            return Err((
                GlssStatus::BufferTooSmall,
                format!("buffer holds {len} values, {} needed", data.len()),
            ));
        }
        if data.is_empty() {
            return Ok(());
        }
        if buf.is_null() {
            return Err(null("buf"));
        }
        // column-major storage is already sample-major
        ptr::copy_nonoverlapping(data.as_ptr(), buf, data.len());
        Ok(())
    })
}

/// # Safety
/// `traj` must come from this library or be null; it is invalid afterwards.
#[no_mangle]
pub unsafe extern "C" fn glss_trajectory_free(traj: *mut GlssTrajectory) {
    if !traj.is_null() {
        drop(Box::from_raw(traj));
    }
}

/// Innovation-form realization of `model`. `closed_loop_radius` may be null.
///
/// # Safety
/// `model` must be a live handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn glss_innovation_form(
    model: *const GlssModel,
    tolerance: f64,
    out: *mut *mut GlssModel,
    closed_loop_radius: *mut f64,
) -> GlssStatus {
    guard(|| {
        let m = model_ref(model)?;
        let out = out_ref(out, "out")?;
        let form = lib(glss::innovation::build_innovation_form(m, tolerance))?;
        if let Some(r) = closed_loop_radius.as_mut() {
            *r = form.closed_loop_radius;
        }
        *out = Box::into_raw(Box::new(GlssModel(form.model)));
        Ok(())
    })
}

/// Rank test of the observability and reachability matrices.
///
/// # Safety
/// `model` must be a live handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn glss_check_minimality(
    model: *const GlssModel,
    rank_tolerance: f64,
    out: *mut GlssRankSummary,
) -> GlssStatus {
    guard(|| {
        let m = model_ref(model)?;
        let out = out_ref(out, "out")?;
        let r = lib(glss::realize::check_minimality(m, rank_tolerance))?;
        *out = GlssRankSummary {
            nx: r.nx,
            observability_rank: r.observability_rank,
            reachability_rank: r.reachability_rank,
            minimal: r.minimal as c_int,
        };
        Ok(())
    })
}

/// Searches `T` with `x̂ = T x` mapping `s` onto `s_hat`. On success
/// `*found` is 1 or 0; when found and `t` is non-null the `nx × nx` matrix
/// is written row-major to `t`, which must hold `t_len >= nx * nx` values.
/// `max_residual` may be null. A violated hypothesis of the matching
/// theorem returns [`GlssStatus::Hypothesis`].
///
/// # Safety
/// `s` and `s_hat` must be live handles, `found` a valid pointer and `t`
/// null or valid for `t_len` writes.
#[no_mangle]
pub unsafe extern "C" fn glss_find_isomorphism(
    s: *const GlssModel,
    s_hat: *const GlssModel,
    tolerance: f64,
    found: *mut c_int,
    t: *mut f64,
    t_len: usize,
    max_residual: *mut f64,
) -> GlssStatus {
    guard(|| {
        let a = model_ref(s)?;
        let b = model_ref(s_hat)?;
        let found = out_ref(found, "found")?;
        let iso = lib(glss::realize::find_isomorphism(a, b, tolerance))?;
        *found = iso.found as c_int;
        if let Some(r) = max_residual.as_mut() {
            *r = iso.max_residual();
        }
        if let (Some(m), false) = (iso.t.as_ref(), t.is_null()) {
            let n = m.nrows();
            if t_len < n * n {
                return Err((
                    GlssStatus::BufferTooSmall,
                    format!("buffer holds {t_len} values, {} needed", n * n),
                ));
            }
            for i in 0..n {
                for j in 0..n {
                    *t.add(i * n + j) = m[(i, j)];
                }
            }
        }
        Ok(())
    })
}
