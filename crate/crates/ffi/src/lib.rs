//! C ABI over `debond-core`.
//!
//! Handles are opaque and owned by the caller once returned; release them with
//! the matching `*_free`. Every entry point returns a `DebondStatus`; on failure
//! `debond_last_error` holds a message for the calling thread.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use debond_core::model::Problem;
use debond_core::quasistatic::quasistatic_front;
use debond_core::solver::{solve_coupled, Solution, SolveOptions};
use debond_core::DebondError;

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DebondStatus {
    Ok = 0,
    NullArgument = 1,
    InvalidUtf8 = 2,
    /// Input rejected: bad JSON, failed precondition or CFL.
    Validation = 3,
    /// The solver failed on valid input.
    Numerical = 4,
    BufferTooSmall = 5,
    Panic = 6,
}

/// Validated problem.
pub struct DebondProblem(Problem);

/// Result of one dynamic run. The field is not kept.
pub struct DebondRun(Solution);

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(msg: impl Into<String>) {
    let msg = msg.into().replace('\0', " ");
    LAST_ERROR.with(|e| *e.borrow_mut() = CString::new(msg).unwrap_or_default());
}

fn status_of(e: &DebondError) -> DebondStatus {
    set_error(format!("{}: {e}", e.kind()));
    if e.is_validation() {
        DebondStatus::Validation
    } else {
        DebondStatus::Numerical
    }
}

fn guard(f: impl FnOnce() -> DebondStatus) -> DebondStatus {
    catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|_| {
        set_error("panic inside debond");
        DebondStatus::Panic
    })
}

fn null(what: &str) -> DebondStatus {
    set_error(format!("{what} is null"));
    DebondStatus::NullArgument
}

/// Message for the last failing call on this thread. The pointer stays valid
/// until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn debond_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// Parses and validates a problem from a NUL-terminated JSON string.
///
/// # Safety
/// `json` must be a valid C string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn debond_problem_from_json(
    json: *const c_char,
    out: *mut *mut DebondProblem,
) -> DebondStatus {
    guard(|| {
        if json.is_null() {
            return null("json");
        }
        if out.is_null() {
            return null("out");
        }
        *out = ptr::null_mut();
        let Ok(text) = CStr::from_ptr(json).to_str() else {
            set_error("json is not UTF-8");
            return DebondStatus::InvalidUtf8;
        };
        match Problem::from_json_str(text) {
            Ok(p) => {
                *out = Box::into_raw(Box::new(DebondProblem(p)));
                DebondStatus::Ok
            }
            Err(e) => status_of(&e),
        }
    })
}

/// # Safety
/// `problem` must come from `debond_problem_from_json` or be null.
#[no_mangle]
pub unsafe extern "C" fn debond_problem_free(problem: *mut DebondProblem) {
    if !problem.is_null() {
        drop(Box::from_raw(problem));
    }
}

/// Runs the coupled solver with default options.
///
/// # Safety
/// `problem` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn debond_solve(
    problem: *const DebondProblem,
    out: *mut *mut DebondRun,
) -> DebondStatus {
    guard(|| {
        if problem.is_null() {
            return null("problem");
        }
        if out.is_null() {
            return null("out");
        }
        *out = ptr::null_mut();
        let opts = SolveOptions {
            store_stride: usize::MAX,
            ..Default::default()
        };
        match solve_coupled(&(*problem).0, &opts) {
            Ok(sol) => {
                *out = Box::into_raw(Box::new(DebondRun(sol)));
                DebondStatus::Ok
            }
            Err(e) => status_of(&e),
        }
    })
}

/// # Safety
/// `run` must come from `debond_solve` or be null.
#[no_mangle]
pub unsafe extern "C" fn debond_run_free(run: *mut DebondRun) {
    if !run.is_null() {
        drop(Box::from_raw(run));
    }
}

/// Number of front knots.
///
/// # Safety
/// `run` must be a live handle or null (returns 0).
#[no_mangle]
pub unsafe extern "C" fn debond_run_front_len(run: *const DebondRun) -> usize {
    if run.is_null() {
        return 0;
    }
    (*run).0.front.len()
}

/// Copies the front knots into `t` and `ell`, each of capacity `cap`.
///
/// # Safety
/// `t` and `ell` must hold `cap` doubles.
#[no_mangle]
pub unsafe extern "C" fn debond_run_front(
    run: *const DebondRun,
    t: *mut f64,
    ell: *mut f64,
    cap: usize,
) -> DebondStatus {
    guard(|| {
        if run.is_null() || t.is_null() || ell.is_null() {
            return null("argument");
        }
        let front = &(*run).0.front;
        let n = front.len();
        if cap < n {
            set_error(format!("need {n} slots, got {cap}"));
            return DebondStatus::BufferTooSmall;
        }
        ptr::copy_nonoverlapping(front.knots().as_ptr(), t, n);
        ptr::copy_nonoverlapping(front.values().as_ptr(), ell, n);
        DebondStatus::Ok
    })
}

/// Largest absolute energy-balance residual of the run.
///
/// # Safety
/// `run` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn debond_run_balance_residual(
    run: *const DebondRun,
    out: *mut f64,
) -> DebondStatus {
    guard(|| {
        if run.is_null() || out.is_null() {
            return null("argument");
        }
        *out = (*run)
            .0
            .energy
            .balance_residual()
            .iter()
            .fold(0.0f64, |m, r| m.max(r.abs()));
        DebondStatus::Ok
    })
}

/// Closed-form quasistatic front on the increasing grid `t[0..n]`, started
/// at `start`, written to `lambda[0..n]`.
///
/// # Safety
/// `t` and `lambda` must hold `n` doubles.
#[no_mangle]
pub unsafe extern "C" fn debond_quasistatic(
    problem: *const DebondProblem,
    t: *const f64,
    n: usize,
    start: f64,
    lambda: *mut f64,
) -> DebondStatus {
    guard(|| {
        if problem.is_null() || t.is_null() || lambda.is_null() {
            return null("argument");
        }
        let p = &(*problem).0;
        let grid = std::slice::from_raw_parts(t, n);
        match quasistatic_front(&p.toughness, &p.loading, grid, start) {
            Ok(evo) => {
                ptr::copy_nonoverlapping(evo.lambda.as_ptr(), lambda, n);
                DebondStatus::Ok
            }
            Err(e) => status_of(&e),
        }
    })
}
