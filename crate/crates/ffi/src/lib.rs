//! C ABI over `symcoord`.
//!
//! Every call returns a [`SymcoordStatus`]. On failure the message is kept
//! per thread and read back with [`symcoord_last_error`]. Objects are opaque
//! handles released with their `_free` function.

use std::cell::RefCell;
use std::collections::BTreeMap;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;
use std::str::FromStr;

use symcoord::diagnostics::{delta_hpq, elementary_hpq};
use symcoord::experiments::{named_transform, run, ExperimentConfig};
use symcoord::models::{build_model, Coords, ModelEntry};
use symcoord::system::SystemRef;
use symcoord::{Error, Method, PhaseState, Trajectory};

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SymcoordStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    Configuration = 3,
    Domain = 4,
    Diverged = 5,
    Experiment = 6,
    Numeric = 7,
    Io = 8,
    Panic = 9,
}

/// A catalog model in one chart.
pub struct SymcoordModel {
    entry: ModelEntry,
    sys: SystemRef,
}

/// A stored trajectory.
pub struct SymcoordTrajectory {
    traj: Trajectory,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(msg: &str) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = c);
}

fn status_of(e: &Error) -> SymcoordStatus {
    match e {
        Error::Configuration(_) | Error::Capability(_) | Error::Parameter(_) => SymcoordStatus::Configuration,
        Error::Argument(_) | Error::Dimension { .. } | Error::Precondition(_) => SymcoordStatus::InvalidArgument,
        Error::Domain(_) | Error::Pole { .. } | Error::SingularTransform { .. } => SymcoordStatus::Domain,
        Error::Diverged | Error::Singular(_) => SymcoordStatus::Diverged,
        Error::Experiment(_) => SymcoordStatus::Experiment,
        Error::Io(_) => SymcoordStatus::Io,
        _ => SymcoordStatus::Numeric,
    }
}

struct Fail(SymcoordStatus, String);

impl From<Error> for Fail {
    fn from(e: Error) -> Self {
        Fail(status_of(&e), e.to_string())
    }
}

fn guard(f: impl FnOnce() -> Result<(), Fail>) -> SymcoordStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            set_error("");
            SymcoordStatus::Ok
        }
        Ok(Err(Fail(status, msg))) => {
            set_error(&msg);
            status
        }
        Err(_) => {
            set_error("internal panic");
            SymcoordStatus::Panic
        }
    }
}

fn null(what: &str) -> Fail {
    Fail(SymcoordStatus::NullPointer, format!("{what} is null"))
}

unsafe fn text<'a>(p: *const c_char, what: &str) -> Result<&'a str, Fail> {
    if p.is_null() {
        return Err(null(what));
    }
    CStr::from_ptr(p).to_str().map_err(|_| Fail(SymcoordStatus::InvalidArgument, format!("{what} is not UTF-8")))
}

unsafe fn opt_text<'a>(p: *const c_char, what: &str) -> Result<Option<&'a str>, Fail> {
    if p.is_null() {
        Ok(None)
    } else {
        text(p, what).map(Some)
    }
}

unsafe fn slice<'a>(p: *const f64, len: usize, what: &str) -> Result<&'a [f64], Fail> {
    if p.is_null() {
        return Err(null(what));
    }
    Ok(std::slice::from_raw_parts(p, len))
}

unsafe fn model<'a>(m: *const SymcoordModel) -> Result<&'a SymcoordModel, Fail> {
    m.as_ref().ok_or_else(|| null("model"))
}

fn phase_state(m: &SymcoordModel, z: &[f64]) -> Result<PhaseState, Fail> {
    let d = m.sys.dof();
    if z.len() != 2 * d {
        return Err(Error::Dimension { expected: 2 * d, got: z.len() }.into());
    }
    Ok(PhaseState::from_z(z)?)
}

unsafe fn write_out(out: *mut f64, out_len: usize, v: &[f64]) -> Result<(), Fail> {
    if out.is_null() {
        return Err(null("output buffer"));
    }
    if out_len < v.len() {
        return Err(Fail(
            SymcoordStatus::InvalidArgument,
            format!("output buffer holds {out_len} values, {} needed", v.len()),
        ));
    }
    std::slice::from_raw_parts_mut(out, v.len()).copy_from_slice(v);
    Ok(())
}

/// Message of the last failed call on this thread, empty after a success.
/// Valid until the next call on the same thread.
#[no_mangle]
pub extern "C" fn symcoord_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// Builds a Hamiltonian catalog model.
///
/// `coords` may be null for the model's default chart. `params` is null or a
/// comma-separated `key=value` list. `h` is the step size for step-dependent
/// charts and is ignored when not positive.
///
/// # Safety
/// String arguments must be null or NUL-terminated; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn symcoord_model_new(
    name: *const c_char,
    coords: *const c_char,
    params: *const c_char,
    h: f64,
    out: *mut *mut SymcoordModel,
) -> SymcoordStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        *out = ptr::null_mut();
        let name = text(name, "name")?;
        let coords = opt_text(coords, "coords")?.map(Coords::from_str).transpose()?;
        let mut overrides = BTreeMap::new();
        for kv in opt_text(params, "params")?.unwrap_or("").split(',').map(str::trim).filter(|s| !s.is_empty()) {
            let (k, v) = kv
                .split_once('=')
                .ok_or_else(|| Fail(SymcoordStatus::InvalidArgument, format!("param '{kv}' is not key=value")))?;
            let v: f64 = v
                .trim()
                .parse()
                .map_err(|_| Fail(SymcoordStatus::InvalidArgument, format!("param '{k}' is not a number")))?;
            overrides.insert(k.trim().to_string(), v);
        }
        let entry = build_model(name, coords, &overrides, (h > 0.0).then_some(h))?;
        let sys = entry.hamiltonian()?;
        *out = Box::into_raw(Box::new(SymcoordModel { entry, sys }));
        Ok(())
    })
}

/// # Safety
/// `m` must come from [`symcoord_model_new`] and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn symcoord_model_free(m: *mut SymcoordModel) {
    if !m.is_null() {
        drop(Box::from_raw(m));
    }
}

/// Degrees of freedom; the phase-space dimension is twice this.
///
/// # Safety
/// `m` must be a live model and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn symcoord_model_dof(m: *const SymcoordModel, out: *mut usize) -> SymcoordStatus {
    guard(|| {
        let m = model(m)?;
        *out.as_mut().ok_or_else(|| null("out"))? = m.sys.dof();
        Ok(())
    })
}

/// Model default initial state `(q, p)` in the model's chart.
///
/// # Safety
/// `out` must hold `out_len` doubles.
#[no_mangle]
pub unsafe extern "C" fn symcoord_model_default_state(
    m: *const SymcoordModel,
    out: *mut f64,
    out_len: usize,
) -> SymcoordStatus {
    guard(|| {
        let m = model(m)?;
        write_out(out, out_len, &m.entry.default_ic)
    })
}

/// `H(z)` with `z = (q, p)`.
///
/// # Safety
/// `z` must hold `len` doubles and `out` be writable.
#[no_mangle]
pub unsafe extern "C" fn symcoord_energy(
    m: *const SymcoordModel,
    z: *const f64,
    len: usize,
    out: *mut f64,
) -> SymcoordStatus {
    guard(|| {
        let m = model(m)?;
        let s = phase_state(m, slice(z, len, "z")?)?;
        *out.as_mut().ok_or_else(|| null("out"))? = m.sys.energy(&s)?;
        Ok(())
    })
}

/// `(H_q, H_p)` at `z`.
///
/// # Safety
/// `z` must hold `len` doubles and `out` `out_len` doubles.
#[no_mangle]
pub unsafe extern "C" fn symcoord_gradient(
    m: *const SymcoordModel,
    z: *const f64,
    len: usize,
    out: *mut f64,
    out_len: usize,
) -> SymcoordStatus {
    guard(|| {
        let m = model(m)?;
        let s = phase_state(m, slice(z, len, "z")?)?;
        let g: Vec<f64> = m.sys.grad_q(&s)?.iter().chain(m.sys.grad_p(&s)?.iter()).copied().collect();
        write_out(out, out_len, &g)
    })
}

/// Maps an original-chart state into the model's chart (`forward != 0`) or
/// back.
///
/// # Safety
/// `z` must hold `len` doubles and `out` `out_len` doubles.
#[no_mangle]
pub unsafe extern "C" fn symcoord_chart_map(
    m: *const SymcoordModel,
    forward: i32,
    z: *const f64,
    len: usize,
    out: *mut f64,
    out_len: usize,
) -> SymcoordStatus {
    guard(|| {
        let m = model(m)?;
        let s = phase_state(m, slice(z, len, "z")?)?;
        let t = if forward != 0 { m.entry.to_chart(&s)? } else { m.entry.to_original(&s)? };
        write_out(out, out_len, t.z().as_slice())
    })
}

/// `H_p · H_q` at `z`.
///
/// # Safety
/// `z` must hold `len` doubles and `out` be writable.
#[no_mangle]
pub unsafe extern "C" fn symcoord_elementary_hpq(
    m: *const SymcoordModel,
    z: *const f64,
    len: usize,
    out: *mut f64,
) -> SymcoordStatus {
    guard(|| {
        let m = model(m)?;
        let s = phase_state(m, slice(z, len, "z")?)?;
        *out.as_mut().ok_or_else(|| null("out"))? = elementary_hpq(m.sys.as_ref(), &s)?;
        Ok(())
    })
}

/// `δ` at `z` for a named point transform (`cartesian-to-polar`,
/// `polar-to-cartesian` or `oscillator`).
///
/// # Safety
/// `transform` must be NUL-terminated, `z` hold `len` doubles and `out` be
/// writable.
#[no_mangle]
pub unsafe extern "C" fn symcoord_delta_hpq(
    m: *const SymcoordModel,
    transform: *const c_char,
    z: *const f64,
    len: usize,
    out: *mut f64,
) -> SymcoordStatus {
    guard(|| {
        let m = model(m)?;
        let pt = named_transform(&m.entry.name, text(transform, "transform")?)?;
        let s = phase_state(m, slice(z, len, "z")?)?;
        *out.as_mut().ok_or_else(|| null("out"))? = delta_hpq(m.sys.as_ref(), pt.as_ref(), &s)?;
        Ok(())
    })
}

/// Integrates `n_steps` steps of size `h` with a named method from `z0`.
/// Divergence ends the trajectory early instead of failing.
///
/// # Safety
/// `method` must be NUL-terminated, `z0` hold `len` doubles and `out` be
/// writable.
#[no_mangle]
pub unsafe extern "C" fn symcoord_solve(
    m: *const SymcoordModel,
    method: *const c_char,
    z0: *const f64,
    len: usize,
    h: f64,
    n_steps: usize,
    out: *mut *mut SymcoordTrajectory,
) -> SymcoordStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        *out = ptr::null_mut();
        let m = model(m)?;
        let method = Method::from_str(text(method, "method")?)?;
        let s0 = phase_state(m, slice(z0, len, "z0")?)?;
        let traj = symcoord::solve(method, m.sys.as_ref(), &s0, h, n_steps)?;
        *out = Box::into_raw(Box::new(SymcoordTrajectory { traj }));
        Ok(())
    })
}

/// # Safety
/// `t` must come from [`symcoord_solve`] and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn symcoord_trajectory_free(t: *mut SymcoordTrajectory) {
    if !t.is_null() {
        drop(Box::from_raw(t));
    }
}

/// Number of stored states, or 0 for a null handle.
///
/// # Safety
/// `t` must be null or a live trajectory.
#[no_mangle]
pub unsafe extern "C" fn symcoord_trajectory_len(t: *const SymcoordTrajectory) -> usize {
    t.as_ref().map_or(0, |t| t.traj.len())
}

/// Index of the first state that failed, or -1 when the run completed.
///
/// # Safety
/// `t` must be null or a live trajectory.
#[no_mangle]
pub unsafe extern "C" fn symcoord_trajectory_diverged_at(t: *const SymcoordTrajectory) -> i64 {
    t.as_ref().and_then(|t| t.traj.diverged_at).map_or(-1, |i| i as i64)
}

/// Time and `(q, p)` of stored state `index`.
///
/// # Safety
/// `t` must be a live trajectory, `time` writable or null, and `out` hold
/// `out_len` doubles.
#[no_mangle]
pub unsafe extern "C" fn symcoord_trajectory_state(
    t: *const SymcoordTrajectory,
    index: usize,
    time: *mut f64,
    out: *mut f64,
    out_len: usize,
) -> SymcoordStatus {
    guard(|| {
        let t = t.as_ref().ok_or_else(|| null("trajectory"))?;
        let s = t.traj.states.get(index).ok_or_else(|| {
            Fail(SymcoordStatus::InvalidArgument, format!("index {index} out of range ({} states)", t.traj.len()))
        })?;
        if let Some(tm) = time.as_mut() {
            *tm = t.traj.time(index);
        }
        write_out(out, out_len, s.z().as_slice())
    })
}

/// Runs an experiment described by a TOML document and returns its CSV.
/// The string must be released with [`symcoord_string_free`].
///
/// # Safety
/// `toml` must be NUL-terminated and `csv_out` writable.
#[no_mangle]
pub unsafe extern "C" fn symcoord_run_experiment(toml: *const c_char, csv_out: *mut *mut c_char) -> SymcoordStatus {
    guard(|| {
        if csv_out.is_null() {
            return Err(null("csv_out"));
        }
        *csv_out = ptr::null_mut();
        let cfg = ExperimentConfig::from_toml_str(text(toml, "toml")?)?;
        let csv = run(&cfg)?.csv(&cfg);
        *csv_out = CString::new(csv)
            .map_err(|_| Fail(SymcoordStatus::Numeric, "csv contains a NUL byte".into()))?
            .into_raw();
        Ok(())
    })
}

/// # Safety
/// `s` must come from this library and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn symcoord_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}
