use std::ffi::{c_char, CStr, CString};
use std::path::{Path, PathBuf};
use std::ptr;

use skewcrit_ffi::*;

fn load(name: &str) -> *mut SkcProblem {
    let name = CString::new(name).unwrap();
    let mut p = ptr::null_mut();
    assert_eq!(unsafe { skc_problem_from_example(name.as_ptr(), &mut p) }, SkcStatus::Ok);
    assert!(!p.is_null());
    p
}

fn last_error() -> String {
    let mut buf = vec![0 as c_char; 512];
    let len = unsafe { skc_last_error(buf.as_mut_ptr(), buf.len()) };
    assert!(len > 0);
    unsafe { CStr::from_ptr(buf.as_ptr()) }.to_string_lossy().into_owned()
}

#[test]
fn solve_through_the_handle() {
    let p = load("skew3d");
    let mut dims = SkcDims::default();
    assert_eq!(unsafe { skc_problem_dims(p, &mut dims) }, SkcStatus::Ok);
    assert_eq!((dims.n, dims.m, dims.d, dims.is_family), (3, 1, 2, 0));

    let y = [0.4];
    let mut x = [0.0; 3];
    let mut info = SkcSolveInfo::default();
    let st = unsafe { skc_solve(p, y.as_ptr(), 1, ptr::null(), 0, x.as_mut_ptr(), 3, &mut info) };
    assert_eq!(st, SkcStatus::Ok);
    assert!((x[0] - 0.4).abs() < 1e-10 && x[1].abs() < 1e-10 && x[2].abs() < 1e-10);
    assert_eq!(info.converged, 1);
    assert!((info.hessian_condition - (3.0 + 5f64.sqrt()) / 2.0).abs() < 1e-9);
    unsafe { skc_problem_free(p) };
}

#[test]
fn json_configs_compile() {
    let json = CString::new(r#"{"version": 1, "chart": {"n": 2, "m": 1, "d": 1}, "alpha": ["x1", "x2"], "delta": [["0"]], "g": ["x1"]}"#).unwrap();
    let mut p = ptr::null_mut();
    assert_eq!(unsafe { skc_problem_from_json(json.as_ptr(), &mut p) }, SkcStatus::Ok);
    let (y, mut x) = ([-0.3], [0.0; 2]);
    let x0 = [0.5, 0.5];
    let st = unsafe { skc_solve(p, y.as_ptr(), 1, x0.as_ptr(), 2, x.as_mut_ptr(), 2, ptr::null_mut()) };
    assert_eq!(st, SkcStatus::Ok);
    assert!((x[0] + 0.3).abs() < 1e-12 && x[1].abs() < 1e-12);
    unsafe { skc_problem_free(p) };
}

#[test]
fn errors_map_to_status_codes() {
    let bad = CString::new(r#"{"version": 1, "alpha": ["x1 +"]}"#).unwrap();
    let mut p = ptr::null_mut();
    assert_eq!(unsafe { skc_problem_from_json(bad.as_ptr(), &mut p) }, SkcStatus::ConfigError);
    assert!(p.is_null());
    assert!(last_error().contains("ConfigError"));

    assert_eq!(unsafe { skc_problem_from_json(ptr::null(), &mut p) }, SkcStatus::NullArgument);

    let deg = load("degenerate");
    let mut x = [0.0; 2];
    let st = unsafe { skc_solve(deg, [0.0].as_ptr(), 1, ptr::null(), 0, x.as_mut_ptr(), 2, ptr::null_mut()) };
    assert!(matches!(st, SkcStatus::DegenerateHessian | SkcStatus::NotConverged | SkcStatus::NumericalError), "{st:?}");
    assert!(!last_error().is_empty());

    let triv = load("trivial");
    let st = unsafe { skc_solve(triv, [0.0, 1.0].as_ptr(), 2, ptr::null(), 0, x.as_mut_ptr(), 2, ptr::null_mut()) };
    assert_eq!(st, SkcStatus::DimensionMismatch);
    let st = unsafe { skc_solve(triv, [0.0].as_ptr(), 1, ptr::null(), 0, x.as_mut_ptr(), 1, ptr::null_mut()) };
    assert_eq!(st, SkcStatus::BufferTooSmall);
    let st = unsafe { skc_predict_residual(triv, [0.0].as_ptr(), 1, 2, x.as_mut_ptr(), 2, ptr::null_mut()) };
    assert_eq!(st, SkcStatus::ConfigError);
    unsafe {
        skc_problem_free(deg);
        skc_problem_free(triv);
        skc_problem_free(ptr::null_mut());
    }
}

#[test]
fn last_error_truncates_safely() {
    let name = CString::new("no-such-example").unwrap();
    let mut p = ptr::null_mut();
    assert_eq!(unsafe { skc_problem_from_example(name.as_ptr(), &mut p) }, SkcStatus::ConfigError);
    let full = unsafe { skc_last_error(ptr::null_mut(), 0) };
    let mut small = [1 as c_char; 8];
    assert_eq!(unsafe { skc_last_error(small.as_mut_ptr(), small.len()) }, full);
    assert_eq!(small[7], 0);
    assert_eq!(unsafe { CStr::from_ptr(small.as_ptr()) }.to_bytes().len(), 7);
}

#[test]
fn contact_and_prediction_agree() {
    let p = load("g-perturbed");
    let y = [0.7];
    let (mut measured, mut predicted) = ([0.0; 2], [0.0; 2]);
    let mut info = SkcContactInfo::default();
    let mut cond = 0.0;
    assert_eq!(unsafe { skc_gamma_contact(p, y.as_ptr(), 1, 2, measured.as_mut_ptr(), 2, &mut info) }, SkcStatus::Ok);
    assert_eq!(unsafe { skc_predict_residual(p, y.as_ptr(), 1, 2, predicted.as_mut_ptr(), 2, &mut cond) }, SkcStatus::Ok);
    assert_eq!(info.passed, 1);
    assert!((info.slope - 2.0).abs() < 0.1);
    assert!((predicted[0] + 0.5).abs() < 1e-12 && predicted[1].abs() < 1e-12);
    assert!((measured[0] - predicted[0]).abs() < 1e-4 * 1.5);
    assert!(cond.is_finite() && cond >= 1.0);
    unsafe { skc_problem_free(p) };
}

#[test]
fn verify_returns_a_report() {
    let mut json: *mut c_char = ptr::null_mut();
    assert_eq!(unsafe { skc_verify(SkcSuite::Solver, 3, &mut json) }, SkcStatus::Ok);
    let text = unsafe { CStr::from_ptr(json) }.to_string_lossy().into_owned();
    unsafe { skc_string_free(json) };
    assert!(text.contains("\"seed\": 3"));
    assert!(!text.contains("timestamp"));
}

#[test]
fn version_is_static() {
    let v = unsafe { CStr::from_ptr(skc_version()) }.to_str().unwrap();
    assert_eq!(v, env!("CARGO_PKG_VERSION"));
}

fn crate_dir() -> &'static Path {
    Path::new(env!("CARGO_MANIFEST_DIR"))
}

#[test]
fn header_declares_every_export() {
    let header = std::fs::read_to_string(crate_dir().join("include/skewcrit.h")).unwrap();
    let source = std::fs::read_to_string(crate_dir().join("src/lib.rs")).unwrap();
    let exports: Vec<&str> = source
        .lines()
        .filter_map(|l| l.split("extern \"C\" fn ").nth(1))
        .filter_map(|rest| rest.split('(').next())
        .collect();
    assert!(exports.len() >= 10);
    for name in exports {
        assert!(header.contains(&format!("{name}(")), "header lacks {name}");
    }
    for ty in ["typedef struct SkcProblem SkcProblem;", "SKC_STATUS_OK = 0", "SKC_STATUS_PANIC = 11", "SKC_SUITE_ALL = 0"] {
        assert!(header.contains(ty), "header lacks {ty}");
    }
}

fn target_dir() -> PathBuf {
    // target/<profile>/deps/<test binary>
    std::env::current_exe().unwrap().parent().unwrap().parent().unwrap().to_path_buf()
}

#[test]
fn c_program_links_against_the_shared_library() {
    let lib_dir = target_dir();
    if !lib_dir.join("libskewcrit_ffi.so").exists() || std::process::Command::new("cc").arg("--version").output().is_err() {
        eprintln!("skipping: no C compiler or shared library");
        return;
    }
    let tmp = tempfile::tempdir().unwrap();
    let exe = tmp.path().join("smoke");
    let status = std::process::Command::new("cc")
        .arg(crate_dir().join("tests/c/smoke.c"))
        .arg("-I")
        .arg(crate_dir().join("include"))
        .arg("-L")
        .arg(&lib_dir)
        .arg(format!("-Wl,-rpath,{}", lib_dir.display()))
        .args(["-lskewcrit_ffi", "-lm", "-Wall", "-Werror", "-o"])
        .arg(&exe)
        .status()
        .unwrap();
    assert!(status.success());
    let out = std::process::Command::new(&exe).output().unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(String::from_utf8_lossy(&out.stdout).contains("x_c = 0.400000000000"));
}
