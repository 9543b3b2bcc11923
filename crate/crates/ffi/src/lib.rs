//! C interface to the adversim simulation library.
//!
//! Every fallible function returns an [`AdversimStatus`]; on failure the
//! message is available from [`adversim_last_error`] on the same thread.
//! Strings handed out by the library are released with
//! [`adversim_string_free`], experiments with [`adversim_experiment_free`].

use std::cell::RefCell;
use std::ffi::{CStr, CString};
use std::os::raw::c_char;
use std::panic::{catch_unwind, AssertUnwindSafe};

use adversim::config::Config;
use adversim::domain::RegretRecord;
use adversim::engine::{self, runs_csv, verify_bound, ExperimentSpec, Summary, Verdict};
use adversim::learners;
use adversim::suites;

/// Result code of every fallible call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AdversimStatus {
    Ok = 0,
    /// A required pointer argument was null.
    NullPointer = 1,
    /// A string argument was not valid UTF-8.
    InvalidUtf8 = 2,
    /// The TOML configuration could not be parsed or validated.
    Config = 3,
    /// A numeric parameter was out of range.
    InvalidArgument = 4,
    /// The simulation or computation failed.
    Runtime = 5,
    /// The experiment has not been run yet.
    NotRun = 6,
    /// An internal panic was caught at the boundary.
    Panic = 7,
}

/// Opaque experiment handle.
pub struct AdversimExperiment {
    spec: ExperimentSpec,
    results: Option<RunResults>,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(msg: impl Into<String>) {
    let msg = msg.into().replace('\0', " ");
    LAST_ERROR.with(|e| *e.borrow_mut() = CString::new(msg).expect("interior nuls removed"));
}

struct Fail(AdversimStatus, String);

impl Fail {
    fn null(what: &str) -> Self {
        Fail(AdversimStatus::NullPointer, format!("{what} is null"))
    }
}

fn lib(status: AdversimStatus) -> impl Fn(adversim::Error) -> Fail {
    move |e| Fail(status, e.to_string())
}

fn guard(f: impl FnOnce() -> Result<(), Fail>) -> AdversimStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => AdversimStatus::Ok,
        Ok(Err(Fail(status, msg))) => {
            set_error(msg);
            status
        }
        Err(_) => {
            set_error("internal panic");
            AdversimStatus::Panic
        }
    }
}

unsafe fn str_arg<'a>(p: *const c_char, what: &str) -> Result<&'a str, Fail> {
    if p.is_null() {
        return Err(Fail::null(what));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|e| Fail(AdversimStatus::InvalidUtf8, format!("{what}: {e}")))
}

unsafe fn slice_arg<'a>(p: *const f64, len: usize, what: &str) -> Result<&'a [f64], Fail> {
    if len == 0 {
        return Ok(&[]);
    }
    if p.is_null() {
        return Err(Fail::null(what));
    }
    Ok(std::slice::from_raw_parts(p, len))
}

unsafe fn put<T>(out: *mut T, v: T, what: &str) -> Result<(), Fail> {
    if out.is_null() {
        return Err(Fail::null(what));
    }
    out.write(v);
    Ok(())
}

unsafe fn put_string(out: *mut *mut c_char, s: String) -> Result<(), Fail> {
    let c = CString::new(s).map_err(|e| Fail(AdversimStatus::Runtime, e.to_string()))?;
    put(out, c.into_raw(), "out")
}

/// Message of the last failed call on this thread, or an empty string.
/// The pointer stays valid until the next call into the library.
#[no_mangle]
pub extern "C" fn adversim_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// Releases a string returned by the library. Null is ignored.
///
/// # Safety
/// `s` must come from this library and not have been freed.
#[no_mangle]
pub unsafe extern "C" fn adversim_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// `2 sqrt(2) sqrt(R^2 sum sigma_t^2 / lambda)`.
///
/// # Safety
/// `sigma` must point to `len` doubles; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn adversim_variance_bound(
    radius: f64,
    lambda: f64,
    sigma: *const f64,
    len: usize,
    out: *mut f64,
) -> AdversimStatus {
    guard(|| {
        let s = slice_arg(sigma, len, "sigma")?;
        let v = engine::variance_bound(radius, lambda, s)
            .map_err(lib(AdversimStatus::InvalidArgument))?;
        put(out, v, "out")
    })
}

/// Variance bound on the `d`-simplex (`R^2 = ln d`, `lambda = 1`).
///
/// # Safety
/// As [`adversim_variance_bound`].
#[no_mangle]
pub unsafe extern "C" fn adversim_variance_bound_simplex(
    dimension: usize,
    sigma: *const f64,
    len: usize,
    out: *mut f64,
) -> AdversimStatus {
    guard(|| {
        let s = slice_arg(sigma, len, "sigma")?;
        let v = engine::variance_bound_simplex(dimension, s)
            .map_err(lib(AdversimStatus::InvalidArgument))?;
        put(out, v, "out")
    })
}

/// `2 R delta sqrt(2 T / lambda)`.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn adversim_slow_change_bound(
    radius: f64,
    lambda: f64,
    delta: f64,
    horizon: usize,
    out: *mut f64,
) -> AdversimStatus {
    guard(|| {
        let v = engine::slow_change_bound(radius, lambda, delta, horizon)
            .map_err(lib(AdversimStatus::InvalidArgument))?;
        put(out, v, "out")
    })
}

/// Slow-change bound on the `d`-simplex.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn adversim_slow_change_bound_simplex(
    dimension: usize,
    delta: f64,
    horizon: usize,
    out: *mut f64,
) -> AdversimStatus {
    guard(|| {
        let v = engine::slow_change_bound_simplex(dimension, delta, horizon)
            .map_err(lib(AdversimStatus::InvalidArgument))?;
        put(out, v, "out")
    })
}

/// `2 + sqrt(2 T (4 ln T + ln(1/gamma)))`.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn adversim_smoothed_threshold_bound(
    horizon: usize,
    gamma: f64,
    out: *mut f64,
) -> AdversimStatus {
    guard(|| {
        let v = engine::smoothed_threshold_bound(horizon, gamma)
            .map_err(lib(AdversimStatus::InvalidArgument))?;
        put(out, v, "out")
    })
}

/// One exponential-weights step; writes `n` normalized weights to `out`
/// (which may alias `weights`).
///
/// # Safety
/// `weights`, `losses` and `out` must each hold `n` doubles.
#[no_mangle]
pub unsafe extern "C" fn adversim_ew_step(
    weights: *const f64,
    losses: *const f64,
    n: usize,
    eta: f64,
    out: *mut f64,
) -> AdversimStatus {
    guard(|| {
        if n == 0 {
            return Err(Fail(AdversimStatus::InvalidArgument, "no experts".into()));
        }
        let w = slice_arg(weights, n, "weights")?.to_vec();
        let l = slice_arg(losses, n, "losses")?.to_vec();
        if eta.is_nan()
            || eta < 0.0
            || w.iter().chain(&l).any(|v| !v.is_finite())
            || w.iter().any(|&v| v < 0.0)
            || w.iter().sum::<f64>() <= 0.0
        {
            return Err(Fail(
                AdversimStatus::InvalidArgument,
                "weights must be nonnegative and not all zero; losses finite; eta >= 0".into(),
            ));
        }
        if out.is_null() {
            return Err(Fail::null("out"));
        }
        let next = learners::ew_step(&w, &l, eta);
        std::slice::from_raw_parts_mut(out, n).copy_from_slice(&next);
        Ok(())
    })
}

/// Parses a TOML configuration and selects experiment `id` (the first one
/// when `id` is null).
///
/// # Safety
/// `toml` and a non-null `id` must be NUL-terminated; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn adversim_experiment_from_toml(
    toml: *const c_char,
    id: *const c_char,
    out: *mut *mut AdversimExperiment,
) -> AdversimStatus {
    guard(|| {
        let src = str_arg(toml, "toml")?;
        let cfg = Config::parse(src).map_err(|e| Fail(AdversimStatus::Config, e.to_string()))?;
        let spec = if id.is_null() {
            cfg.experiments[0].clone()
        } else {
            cfg.experiment(str_arg(id, "id")?)
                .map_err(lib(AdversimStatus::Config))?
                .clone()
        };
        let handle = Box::new(AdversimExperiment {
            spec,
            results: None,
        });
        put(out, Box::into_raw(handle), "out")
    })
}

unsafe fn handle<'a>(p: *const AdversimExperiment) -> Result<&'a AdversimExperiment, Fail> {
    p.as_ref().ok_or_else(|| Fail::null("experiment"))
}

unsafe fn handle_mut<'a>(p: *mut AdversimExperiment) -> Result<&'a mut AdversimExperiment, Fail> {
    p.as_mut().ok_or_else(|| Fail::null("experiment"))
}

/// Overrides the master seed; discards earlier results.
///
/// # Safety
/// `exp` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn adversim_experiment_set_seed(
    exp: *mut AdversimExperiment,
    seed: u64,
) -> AdversimStatus {
    guard(|| {
        let e = handle_mut(exp)?;
        e.spec.seed = Some(seed);
        e.results = None;
        Ok(())
    })
}

/// Runs every replicate and checks the configured bound, if any.
///
/// # Safety
/// `exp` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn adversim_experiment_run(exp: *mut AdversimExperiment) -> AdversimStatus {
    guard(|| {
        let e = handle_mut(exp)?;
        let runtime = lib(AdversimStatus::Runtime);
        let records = engine::run_game(&e.spec).map_err(&runtime)?;
        let bound = e.spec.resolve_bound().map_err(&runtime)?;
        let verdict = bound
            .as_ref()
            .map(|b| verify_bound(&records, b, &e.spec))
            .transpose()
            .map_err(&runtime)?;
        e.results = Some((records, bound, verdict));
        Ok(())
    })
}

type RunResults = (Vec<RegretRecord>, Option<engine::Bound>, Option<Verdict>);

fn results(e: &AdversimExperiment) -> Result<&RunResults, Fail> {
    e.results
        .as_ref()
        .ok_or_else(|| Fail(AdversimStatus::NotRun, "experiment has not been run".into()))
}

/// Final regret of each replicate. Writes `min(cap, replicates)` values
/// and stores the replicate count in `len`; pass `cap = 0` to query it.
///
/// # Safety
/// `out` must hold `cap` doubles (may be null when `cap` is 0).
#[no_mangle]
pub unsafe extern "C" fn adversim_experiment_final_regrets(
    exp: *const AdversimExperiment,
    out: *mut f64,
    cap: usize,
    len: *mut usize,
) -> AdversimStatus {
    guard(|| {
        let (records, _, _) = results(handle(exp)?)?;
        if cap > 0 {
            if out.is_null() {
                return Err(Fail::null("out"));
            }
            let dst = std::slice::from_raw_parts_mut(out, cap.min(records.len()));
            for (d, r) in dst.iter_mut().zip(records) {
                *d = r.final_regret();
            }
        }
        put(len, records.len(), "len")
    })
}

/// Writes 1 to `pass` when the bound held on every replicate, 0 when it
/// failed; `Runtime` when the experiment has no bound.
///
/// # Safety
/// `exp` must be a live handle, `pass` writable.
#[no_mangle]
pub unsafe extern "C" fn adversim_experiment_verdict(
    exp: *const AdversimExperiment,
    pass: *mut i32,
) -> AdversimStatus {
    guard(|| {
        let (_, _, verdict) = results(handle(exp)?)?;
        let v = verdict
            .as_ref()
            .ok_or_else(|| Fail(AdversimStatus::Runtime, "experiment has no bound".into()))?;
        put(pass, i32::from(v.pass), "pass")
    })
}

/// Per-round CSV (`replicate,t,learner_loss,cum_regret,bound_value`).
///
/// # Safety
/// `exp` must be a live handle; free `*out` with [`adversim_string_free`].
#[no_mangle]
pub unsafe extern "C" fn adversim_experiment_csv(
    exp: *const AdversimExperiment,
    out: *mut *mut c_char,
) -> AdversimStatus {
    guard(|| {
        let (records, bound, _) = results(handle(exp)?)?;
        put_string(out, runs_csv(records, bound.as_ref()))
    })
}

/// Summary JSON with the verdict.
///
/// # Safety
/// As [`adversim_experiment_csv`].
#[no_mangle]
pub unsafe extern "C" fn adversim_experiment_summary_json(
    exp: *const AdversimExperiment,
    out: *mut *mut c_char,
) -> AdversimStatus {
    guard(|| {
        let e = handle(exp)?;
        let (records, _, verdict) = results(e)?;
        put_string(
            out,
            Summary::new(&e.spec, records, verdict.as_ref()).to_json(),
        )
    })
}

/// Releases an experiment. Null is ignored.
///
/// # Safety
/// `exp` must come from [`adversim_experiment_from_toml`] and not have been
/// freed.
#[no_mangle]
pub unsafe extern "C" fn adversim_experiment_free(exp: *mut AdversimExperiment) {
    if !exp.is_null() {
        drop(Box::from_raw(exp));
    }
}

/// Runs a verification suite and returns its verdict JSON in `out`; `pass`
/// receives 1 or 0. Unknown suites give `InvalidArgument`.
///
/// # Safety
/// `name` must be NUL-terminated; `out` and `pass` writable.
#[no_mangle]
pub unsafe extern "C" fn adversim_verify_suite(
    name: *const c_char,
    seed: u64,
    out: *mut *mut c_char,
    pass: *mut i32,
) -> AdversimStatus {
    guard(|| {
        let name = str_arg(name, "name")?;
        if !suites::SUITES.contains(&name) {
            return Err(Fail(
                AdversimStatus::InvalidArgument,
                format!("unknown suite {name:?}"),
            ));
        }
        if out.is_null() || pass.is_null() {
            return Err(Fail::null("out"));
        }
        let report = suites::run_suite(name, seed)
            .map_err(lib(AdversimStatus::Runtime))?
            .report;
        put(pass, i32::from(report.pass), "pass")?;
        put_string(out, report.to_json())
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::ptr;

    #[test]
    fn panics_are_contained() {
        assert_eq!(guard(|| panic!("boom")), AdversimStatus::Panic);
        let msg = unsafe { CStr::from_ptr(adversim_last_error()) };
        assert_eq!(msg.to_str().unwrap(), "internal panic");
    }

    #[test]
    fn null_out_is_reported() {
        let st = unsafe { adversim_smoothed_threshold_bound(100, 0.1, ptr::null_mut()) };
        assert_eq!(st, AdversimStatus::NullPointer);
    }
}
