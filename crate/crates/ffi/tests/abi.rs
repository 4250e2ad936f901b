use std::ffi::{CStr, CString};
use std::path::PathBuf;
use std::process::Command;
use std::ptr;

use debond_ffi::*;

const EQ: &str = r#"{"epsilon": 0.1, "nu": 1.0, "ell0": 1.0, "t_end": 0.5, "ds": 0.005,
    "toughness": {"kind": "constant", "value": 0.5},
    "loading": {"kind": "constant", "value": 0.9},
    "u0": {"kind": "affine"}}"#;

const RAMP: &str = r#"{"epsilon": 0.1, "nu": 1.0, "ell0": 1.0, "t_end": 1.0, "ds": 0.005,
    "toughness": {"kind": "constant", "value": 0.2},
    "loading": {"kind": "ramp", "from": 1.0, "to": 1.5, "duration": 1.0},
    "u0": {"kind": "affine"}}"#;

fn problem(json: &str) -> (DebondStatus, *mut DebondProblem) {
    let c = CString::new(json).unwrap();
    let mut p = ptr::null_mut();
    let s = unsafe { debond_problem_from_json(c.as_ptr(), &mut p) };
    (s, p)
}

fn last_error() -> String {
    unsafe { CStr::from_ptr(debond_last_error()) }.to_string_lossy().into_owned()
}

#[test]
fn equilibrium_round_trip() {
    let (s, p) = problem(EQ);
    assert_eq!(s, DebondStatus::Ok);
    let mut r = ptr::null_mut();
    assert_eq!(unsafe { debond_solve(p, &mut r) }, DebondStatus::Ok);
    let n = unsafe { debond_run_front_len(r) };
    assert_eq!(n, 101);
    let (mut t, mut l) = (vec![0.0; n], vec![0.0; n]);
    let s = unsafe { debond_run_front(r, t.as_mut_ptr(), l.as_mut_ptr(), n) };
    assert_eq!(s, DebondStatus::Ok);
    assert!(l.iter().all(|&x| x == 1.0));
    assert!((t[n - 1] - 0.5).abs() < 1e-12);
    let mut res = f64::NAN;
    assert_eq!(unsafe { debond_run_balance_residual(r, &mut res) }, DebondStatus::Ok);
    assert!(res <= 1e-10);
    let s = unsafe { debond_run_front(r, t.as_mut_ptr(), l.as_mut_ptr(), n - 1) };
    assert_eq!(s, DebondStatus::BufferTooSmall);
    unsafe {
        debond_run_free(r);
        debond_problem_free(p);
    }
}

#[test]
fn validation_error_carries_pointer() {
    let (s, p) = problem(&EQ.replace("0.005", "\"x\""));
    assert_eq!(s, DebondStatus::Validation);
    assert!(p.is_null());
    assert!(last_error().contains("/ds"), "{}", last_error());
}

#[test]
fn null_and_utf8_are_rejected() {
    let mut p = ptr::null_mut();
    assert_eq!(unsafe { debond_problem_from_json(ptr::null(), &mut p) }, DebondStatus::NullArgument);
    let bad = [0xffu8, 0];
    let s = unsafe { debond_problem_from_json(bad.as_ptr().cast(), &mut p) };
    assert_eq!(s, DebondStatus::InvalidUtf8);
    let mut r = ptr::null_mut();
    assert_eq!(unsafe { debond_solve(ptr::null(), &mut r) }, DebondStatus::NullArgument);
    assert_eq!(unsafe { debond_run_front_len(ptr::null()) }, 0);
    unsafe {
        debond_run_free(ptr::null_mut());
        debond_problem_free(ptr::null_mut());
    }
}

#[test]
fn quasistatic_matches_closed_form() {
    let (_, p) = problem(RAMP);
    let t: Vec<f64> = (0..=100).map(|i| i as f64 * 0.01).collect();
    let mut lam = vec![0.0; t.len()];
    let s = unsafe { debond_quasistatic(p, t.as_ptr(), t.len(), 1.6, lam.as_mut_ptr()) };
    assert_eq!(s, DebondStatus::Ok, "{}", last_error());
    // constant toughness: lambda = max(start, max_s w(s) / sqrt(2 kappa))
    for (ti, li) in t.iter().zip(&lam) {
        let w: f64 = 1.0 + 0.5 * ti;
        assert!((li - (w / 0.4f64.sqrt()).max(1.6)).abs() < 1e-9);
    }
    let s = unsafe { debond_quasistatic(p, t.as_ptr(), t.len(), 0.5, lam.as_mut_ptr()) };
    assert_eq!(s, DebondStatus::Validation);
    unsafe { debond_problem_free(p) };
}

#[test]
fn header_declares_the_api() {
    let h = std::fs::read_to_string(concat!(env!("CARGO_MANIFEST_DIR"), "/include/debond.h")).unwrap();
    for name in [
        "debond_problem_from_json",
        "debond_problem_free",
        "debond_solve",
        "debond_run_free",
        "debond_run_front",
        "debond_run_front_len",
        "debond_run_balance_residual",
        "debond_quasistatic",
        "debond_last_error",
        "DEBOND_STATUS_VALIDATION",
    ] {
        assert!(h.contains(name), "{name} missing from header");
    }
}

/// Compiles a C program against the header and the static library when a C
/// compiler is available.
#[test]
fn c_program_links_and_runs() {
    let cc = std::env::var("CC").unwrap_or_else(|_| "cc".into());
    if Command::new(&cc).arg("--version").output().is_err() {
        eprintln!("no C compiler; skipped");
        return;
    }
    let exe = std::env::current_exe().unwrap();
    let profile_dir = exe.parent().unwrap().parent().unwrap();
    let lib = profile_dir.join("libdebond_ffi.a");
    if !lib.exists() {
        eprintln!("static library not built; skipped");
        return;
    }
    let root = PathBuf::from(env!("CARGO_MANIFEST_DIR"));
    let out = PathBuf::from(env!("CARGO_TARGET_TMPDIR")).join("c_smoke");
    let status = Command::new(&cc)
        .arg(root.join("tests/c_smoke.c"))
        .arg("-I")
        .arg(root.join("include"))
        .arg(&lib)
        .args(["-lpthread", "-ldl", "-lm", "-o"])
        .arg(&out)
        .status()
        .unwrap();
    assert!(status.success());
    let run = Command::new(&out).output().unwrap();
    assert!(run.status.success(), "exit {:?}", run.status.code());
    let text = String::from_utf8_lossy(&run.stdout);
    assert!(text.starts_with("101 validation"), "{text}");
}
