//! C ABI for the `uvarov` crate.
//!
//! Every entry point returns a [`UvarovStatus`]; on anything other than
//! `UVAROV_STATUS_OK` a description is available from
//! [`uvarov_last_error_message`] on the same thread. Strings returned through
//! out-parameters must be released with [`uvarov_string_free`], handles with
//! their matching `_free` function.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;
use std::sync::Arc;

use uvarov::cli::{run_config, Command, ExitStatus, Outcome, Overrides};
use uvarov::config::Config;
use uvarov::moments::{hankel_source, MomentSource};
use uvarov::{Error, Factorization, Matrix, Tolerances};

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum UvarovStatus {
    Ok = 0,
    ParseError = 1,
    Breakdown = 2,
    CouplingSingular = 3,
    CheckFailed = 4,
    InvalidArgument = 5,
    Panic = 6,
}

impl From<ExitStatus> for UvarovStatus {
    fn from(status: ExitStatus) -> Self {
        match status {
            ExitStatus::Ok => Self::Ok,
            ExitStatus::ParseError => Self::ParseError,
            ExitStatus::Breakdown => Self::Breakdown,
            ExitStatus::CouplingSingular => Self::CouplingSingular,
            ExitStatus::CheckFailed => Self::CheckFailed,
        }
    }
}

/// A parsed problem description.
pub struct UvarovProblem {
    config: Config,
}

/// An `f64` block Gauss–Borel factorization of a Hankel moment sequence.
pub struct UvarovFactorization {
    inner: Factorization<f64>,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_last_error(message: impl Into<String>) {
    let text = message.into().replace('\0', " ");
    LAST_ERROR.with(|slot| *slot.borrow_mut() = CString::new(text).ok());
}

fn clear_last_error() {
    LAST_ERROR.with(|slot| *slot.borrow_mut() = None);
}

fn guard(body: impl FnOnce() -> UvarovStatus) -> UvarovStatus {
    clear_last_error();
    match catch_unwind(AssertUnwindSafe(body)) {
        Ok(status) => status,
        Err(payload) => {
            let message = payload
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| payload.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "panic".to_string());
            set_last_error(format!("internal panic: {message}"));
            UvarovStatus::Panic
        }
    }
}

fn invalid(message: &str) -> UvarovStatus {
    set_last_error(message);
    UvarovStatus::InvalidArgument
}

/// Message for the last failed call on this thread, or null. The pointer is
/// valid until the next call into this library on the same thread.
#[no_mangle]
pub extern "C" fn uvarov_last_error_message() -> *const c_char {
    LAST_ERROR.with(|slot| slot.borrow().as_ref().map_or(ptr::null(), |s| s.as_ptr()))
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn uvarov_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Parses a JSON problem description.
///
/// # Safety
/// `json` must be a valid NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn uvarov_problem_from_json(json: *const c_char, out: *mut *mut UvarovProblem) -> UvarovStatus {
    guard(|| {
        if json.is_null() || out.is_null() {
            return invalid("null argument");
        }
        // SAFETY: checked non-null; caller guarantees NUL termination
        let text = match unsafe { CStr::from_ptr(json) }.to_str() {
            Ok(t) => t,
            Err(_) => return invalid("config is not valid UTF-8"),
        };
        match Config::from_json_str(text) {
            Ok(config) => {
                // SAFETY: checked non-null
                unsafe { *out = Box::into_raw(Box::new(UvarovProblem { config })) };
                UvarovStatus::Ok
            }
            Err(e) => {
                set_last_error(e.to_string());
                UvarovStatus::ParseError
            }
        }
    })
}

/// # Safety
/// `problem` must be null or a handle from [`uvarov_problem_from_json`] not
/// yet freed.
#[no_mangle]
pub unsafe extern "C" fn uvarov_problem_free(problem: *mut UvarovProblem) {
    if !problem.is_null() {
        // SAFETY: caller passes a handle produced by Box::into_raw
        drop(unsafe { Box::from_raw(problem) });
    }
}

/// # Safety
/// `s` must be null or a string returned by this library not yet freed.
#[no_mangle]
pub unsafe extern "C" fn uvarov_string_free(s: *mut c_char) {
    if !s.is_null() {
        // SAFETY: caller passes a string produced by CString::into_raw
        drop(unsafe { CString::from_raw(s) });
    }
}

fn degree_arg(degree: i64) -> Option<usize> {
    usize::try_from(degree).ok()
}

unsafe fn run_command(
    problem: *const UvarovProblem,
    command: Command,
    degree: i64,
    report: *mut *mut c_char,
) -> UvarovStatus {
    guard(|| {
        if problem.is_null() || report.is_null() {
            return invalid("null argument");
        }
        // SAFETY: checked non-null; caller passes a live handle
        let problem = unsafe { &*problem };
        let outcome: Outcome = run_config(
            &problem.config,
            command,
            &Overrides {
                degree: degree_arg(degree),
                tolerance: None,
            },
        );
        if let Some(message) = outcome.report.get("error").and_then(|v| v.as_str()) {
            set_last_error(message);
        }
        let text = CString::new(outcome.render()).expect("JSON has no interior NUL");
        // SAFETY: checked non-null
        unsafe { *report = text.into_raw() };
        outcome.exit.into()
    })
}

/// Factorizes up to `n_max` (negative: the config's `n_max`) and writes the
/// JSON report to `*report`. The report is written for every status except
/// `INVALID_ARGUMENT` and `PANIC`.
///
/// # Safety
/// `problem` must be a live handle and `report` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn uvarov_factorize(
    problem: *const UvarovProblem,
    n_max: i64,
    report: *mut *mut c_char,
) -> UvarovStatus {
    unsafe { run_command(problem, Command::Factorize, n_max, report) }
}

/// Perturbed polynomials at `degree` (negative: the config's `n_max`).
///
/// # Safety
/// `problem` must be a live handle and `report` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn uvarov_transform(
    problem: *const UvarovProblem,
    degree: i64,
    with_oracle: bool,
    report: *mut *mut c_char,
) -> UvarovStatus {
    unsafe { run_command(problem, Command::Transform { with_oracle }, degree, report) }
}

/// Full theorem-vs-oracle verification up to `n_max` (negative: the config's).
///
/// # Safety
/// `problem` must be a live handle and `report` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn uvarov_verify(problem: *const UvarovProblem, n_max: i64, report: *mut *mut c_char) -> UvarovStatus {
    unsafe { run_command(problem, Command::Verify, n_max, report) }
}

/// Factorizes the Hankel moments `moments[0..count]`, each a row-major
/// `p × p` block, through degree `n_max`. `pivot_tol ≤ 0` selects the default.
/// On `BREAKDOWN` the handle is still produced and holds the degrees below
/// the failing one.
///
/// # Safety
/// `moments` must point to `count · p · p` doubles and `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn uvarov_hankel_factorize_f64(
    p: usize,
    moments: *const f64,
    count: usize,
    n_max: usize,
    pivot_tol: f64,
    out: *mut *mut UvarovFactorization,
) -> UvarovStatus {
    guard(|| {
        if moments.is_null() || out.is_null() || p == 0 {
            return invalid("null argument or zero block size");
        }
        if count < 2 * n_max + 1 {
            return invalid("need at least 2*n_max + 1 moments");
        }
        // SAFETY: caller guarantees count·p·p readable doubles
        let data = unsafe { std::slice::from_raw_parts(moments, count * p * p) };
        let blocks: Vec<_> = data
            .chunks_exact(p * p)
            .map(|c| Matrix::from_fn(p, p, |i, j| c[i * p + j]))
            .collect();
        let source: Arc<dyn MomentSource<f64>> = match hankel_source(blocks) {
            Ok(s) => Arc::new(s),
            Err(e) => {
                set_last_error(e.to_string());
                return UvarovStatus::ParseError;
            }
        };
        let mut tol = Tolerances::default();
        if pivot_tol > 0.0 {
            tol.pivot = pivot_tol;
        }
        let mut inner = Factorization::empty(source, tol);
        let status = match inner.extend_to(n_max) {
            Ok(()) => UvarovStatus::Ok,
            Err(e @ Error::Breakdown { .. }) => {
                set_last_error(e.to_string());
                UvarovStatus::Breakdown
            }
            Err(e) => {
                set_last_error(e.to_string());
                return UvarovStatus::ParseError;
            }
        };
        // SAFETY: checked non-null
        unsafe { *out = Box::into_raw(Box::new(UvarovFactorization { inner })) };
        status
    })
}

/// # Safety
/// `f` must be null or a live factorization handle.
#[no_mangle]
pub unsafe extern "C" fn uvarov_factorization_free(f: *mut UvarovFactorization) {
    if !f.is_null() {
        // SAFETY: caller passes a handle produced by Box::into_raw
        drop(unsafe { Box::from_raw(f) });
    }
}

/// Number of factorized degrees (`n_max + 1` unless breakdown occurred).
///
/// # Safety
/// `f` must be a live factorization handle.
#[no_mangle]
pub unsafe extern "C" fn uvarov_factorization_degrees(f: *const UvarovFactorization) -> usize {
    if f.is_null() {
        return 0;
    }
    // SAFETY: checked non-null
    unsafe { &*f }.inner.degrees()
}

fn copy_blocks(blocks: &[Matrix<f64>], out: *mut f64, out_len: usize) -> UvarovStatus {
    let needed: usize = blocks.iter().map(|b| b.entries().len()).sum();
    if out.is_null() || out_len < needed {
        return invalid("output buffer too small");
    }
    // SAFETY: checked non-null and long enough
    let dst = unsafe { std::slice::from_raw_parts_mut(out, needed) };
    let mut offset = 0;
    for b in blocks {
        let e = b.entries();
        dst[offset..offset + e.len()].copy_from_slice(e);
        offset += e.len();
    }
    UvarovStatus::Ok
}

unsafe fn with_factorization(
    f: *const UvarovFactorization,
    body: impl FnOnce(&Factorization<f64>) -> UvarovStatus,
) -> UvarovStatus {
    guard(|| {
        if f.is_null() {
            return invalid("null factorization");
        }
        // SAFETY: checked non-null; caller passes a live handle
        body(&unsafe { &*f }.inner)
    })
}

fn degree_error(e: Error) -> UvarovStatus {
    set_last_error(e.to_string());
    UvarovStatus::InvalidArgument
}

/// Writes `H_n` row-major into `out` (`p · p` doubles).
///
/// # Safety
/// `f` must be a live handle and `out` must hold `out_len` doubles.
#[no_mangle]
pub unsafe extern "C" fn uvarov_factorization_h(
    f: *const UvarovFactorization,
    n: usize,
    out: *mut f64,
    out_len: usize,
) -> UvarovStatus {
    unsafe {
        with_factorization(f, |f| match f.h(n) {
            Ok(h) => copy_blocks(std::slice::from_ref(h), out, out_len),
            Err(e) => degree_error(e),
        })
    }
}

/// Writes the coefficients of the first-family polynomial of degree `n`
/// into `out`: `n + 1` row-major `p × p` blocks in ascending powers.
///
/// # Safety
/// `f` must be a live handle and `out` must hold `out_len` doubles.
#[no_mangle]
pub unsafe extern "C" fn uvarov_factorization_poly1(
    f: *const UvarovFactorization,
    n: usize,
    out: *mut f64,
    out_len: usize,
) -> UvarovStatus {
    unsafe {
        with_factorization(f, |f| match f.polynomial1(n) {
            Ok(poly) => copy_blocks(&(0..=n).map(|k| poly.coeff(k)).collect::<Vec<_>>(), out, out_len),
            Err(e) => degree_error(e),
        })
    }
}

/// Second-family counterpart of [`uvarov_factorization_poly1`].
///
/// # Safety
/// `f` must be a live handle and `out` must hold `out_len` doubles.
#[no_mangle]
pub unsafe extern "C" fn uvarov_factorization_poly2(
    f: *const UvarovFactorization,
    n: usize,
    out: *mut f64,
    out_len: usize,
) -> UvarovStatus {
    unsafe {
        with_factorization(f, |f| match f.polynomial2(n) {
            Ok(poly) => copy_blocks(&(0..=n).map(|k| poly.coeff(k)).collect::<Vec<_>>(), out, out_len),
            Err(e) => degree_error(e),
        })
    }
}
