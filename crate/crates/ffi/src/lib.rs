//! C ABI for skewcrit.
//!
//! Problems are opaque `SkcProblem` handles created from JSON config text or
//! from a built-in example name. Every fallible call returns an `SkcStatus`;
//! on failure the message is kept per thread and can be copied out with
//! `skc_last_error`. Strings returned by the library are released with
//! `skc_string_free`.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use skewcrit::acceptance::{run_suite, suite_report, AcceptanceSettings, Suite};
use skewcrit::config::{Compiled, ProblemConfig};
use skewcrit::numerics::Vector;
use skewcrit::registry::example;
use skewcrit::solver::solve;
use skewcrit::variation::{
    assemble_residual_system, predict_solution_residual, verify_gamma_contact, AssemblyOptions, GammaSettings, Member,
};
use skewcrit::Error;

/// Result code of every fallible call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SkcStatus {
    Ok = 0,
    NullArgument = 1,
    InvalidUtf8 = 2,
    ConfigError = 3,
    DimensionMismatch = 4,
    BufferTooSmall = 5,
    DegenerateHessian = 6,
    NotConverged = 7,
    HypothesisViolated = 8,
    NumericalError = 9,
    CheckFailed = 10,
    Panic = 11,
}

/// Which acceptance criteria `skc_verify` runs.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SkcSuite {
    All = 0,
    Solver = 1,
    Contact = 2,
    Variation = 3,
}

/// Opaque compiled problem.
pub struct SkcProblem {
    compiled: Compiled,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, Default)]
pub struct SkcDims {
    pub n: usize,
    pub m: usize,
    pub d: usize,
    /// Nonzero when the config holds two problems joined by `t`.
    pub is_family: i32,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, Default)]
pub struct SkcSolveInfo {
    pub iterations: u32,
    pub converged: i32,
    pub final_residual: f64,
    pub hessian_condition: f64,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, Default)]
pub struct SkcContactInfo {
    /// Fitted slope, NaN when machine-limited.
    pub slope: f64,
    pub machine_limited: i32,
    pub passed: i32,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_last_error(msg: &str) {
    let c = CString::new(msg.replace('\0', " ")).expect("nul bytes removed");
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

struct Fail(SkcStatus, String);

impl From<Error> for Fail {
    fn from(e: Error) -> Self {
        let status = match &e {
            Error::Config(_) | Error::Expr(_) => SkcStatus::ConfigError,
            Error::DimensionMismatch(_) | Error::NotSquare { .. } => SkcStatus::DimensionMismatch,
            Error::DegenerateHessian { .. } => SkcStatus::DegenerateHessian,
            Error::MaxIterExceeded { .. } | Error::NewtonFailed { .. } => SkcStatus::NotConverged,
            Error::HypothesisViolated { .. } => SkcStatus::HypothesisViolated,
            _ => SkcStatus::NumericalError,
        };
        Fail(status, e.to_string())
    }
}

fn fail(status: SkcStatus, msg: impl Into<String>) -> Fail {
    Fail(status, msg.into())
}

fn guard(f: impl FnOnce() -> Result<SkcStatus, Fail>) -> SkcStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(status)) => status,
        Ok(Err(Fail(status, msg))) => {
            set_last_error(&msg);
            status
        }
        Err(_) => {
            set_last_error("panic inside skewcrit");
            SkcStatus::Panic
        }
    }
}

unsafe fn str_arg<'a>(p: *const c_char, what: &str) -> Result<&'a str, Fail> {
    if p.is_null() {
        return Err(fail(SkcStatus::NullArgument, format!("{what} is null")));
    }
    CStr::from_ptr(p).to_str().map_err(|_| fail(SkcStatus::InvalidUtf8, format!("{what} is not UTF-8")))
}

unsafe fn vec_arg(p: *const f64, len: usize, want: usize, what: &str) -> Result<Vector, Fail> {
    if len != want {
        return Err(fail(SkcStatus::DimensionMismatch, format!("{what} needs {want} value(s), got {len}")));
    }
    if want == 0 {
        return Ok(Vector::zeros(0));
    }
    if p.is_null() {
        return Err(fail(SkcStatus::NullArgument, format!("{what} is null")));
    }
    Ok(Vector::from_row_slice(std::slice::from_raw_parts(p, len)))
}

unsafe fn write_out(v: &Vector, out: *mut f64, len: usize, what: &str) -> Result<(), Fail> {
    if len < v.len() {
        return Err(fail(SkcStatus::BufferTooSmall, format!("{what} needs {} slot(s), got {len}", v.len())));
    }
    if v.is_empty() {
        return Ok(());
    }
    if out.is_null() {
        return Err(fail(SkcStatus::NullArgument, format!("{what} is null")));
    }
    ptr::copy_nonoverlapping(v.as_ptr(), out, v.len());
    Ok(())
}

unsafe fn problem_ref<'a>(p: *const SkcProblem) -> Result<&'a SkcProblem, Fail> {
    p.as_ref().ok_or_else(|| fail(SkcStatus::NullArgument, "problem handle is null"))
}

fn dims(c: &Compiled) -> Result<(usize, usize), Fail> {
    c.chart.as_ref().map(|ch| (ch.n, ch.m)).ok_or_else(|| fail(SkcStatus::ConfigError, "config declares no problem"))
}

fn boxed(compiled: Compiled, out: *mut *mut SkcProblem) -> Result<SkcStatus, Fail> {
    if out.is_null() {
        return Err(fail(SkcStatus::NullArgument, "output handle pointer is null"));
    }
    unsafe { *out = Box::into_raw(Box::new(SkcProblem { compiled })) };
    Ok(SkcStatus::Ok)
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn skc_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Copies the last error message of this thread into `buf`, truncating if
/// needed. Returns the full message length without the terminating NUL, or 0
/// when no error has been recorded.
///
/// # Safety
/// `buf` must be null or point to `len` writable bytes.
#[no_mangle]
pub unsafe extern "C" fn skc_last_error(buf: *mut c_char, len: usize) -> usize {
    LAST_ERROR.with(|e| match e.borrow().as_ref() {
        None => 0,
        Some(msg) => {
            let bytes = msg.as_bytes();
            if !buf.is_null() && len > 0 {
                let n = bytes.len().min(len - 1);
                ptr::copy_nonoverlapping(bytes.as_ptr().cast(), buf, n);
                *buf.add(n) = 0;
            }
            bytes.len()
        }
    })
}

/// Compiles a JSON config into a problem handle.
///
/// # Safety
/// `json` must be a NUL-terminated string; `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn skc_problem_from_json(json: *const c_char, out: *mut *mut SkcProblem) -> SkcStatus {
    guard(|| {
        let text = str_arg(json, "json")?;
        let compiled = ProblemConfig::from_json(text)?.compile()?;
        boxed(compiled, out)
    })
}

/// Loads one of the shipped example configs by name.
///
/// # Safety
/// `name` must be a NUL-terminated string; `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn skc_problem_from_example(name: *const c_char, out: *mut *mut SkcProblem) -> SkcStatus {
    guard(|| {
        let name = str_arg(name, "name")?;
        let ex = example(name).ok_or_else(|| fail(SkcStatus::ConfigError, format!("no example named {name:?}")))?;
        boxed(ex.config()?.compile()?, out)
    })
}

/// Releases a handle. Null is ignored.
///
/// # Safety
/// `p` must come from one of the constructors and not be freed twice.
#[no_mangle]
pub unsafe extern "C" fn skc_problem_free(p: *mut SkcProblem) {
    if !p.is_null() {
        drop(Box::from_raw(p));
    }
}

/// # Safety
/// `p` must be a live handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn skc_problem_dims(p: *const SkcProblem, out: *mut SkcDims) -> SkcStatus {
    guard(|| {
        let c = &problem_ref(p)?.compiled;
        let chart = c.chart.as_ref().ok_or_else(|| fail(SkcStatus::ConfigError, "config declares no problem"))?;
        let out = out.as_mut().ok_or_else(|| fail(SkcStatus::NullArgument, "out is null"))?;
        *out = SkcDims { n: chart.n, m: chart.m, d: chart.d, is_family: c.family.is_some() as i32 };
        Ok(SkcStatus::Ok)
    })
}

/// Newton solve for the critical point over `y`. `x0` may be null to use the
/// config's starting point. For families the `t = 0` problem is solved.
///
/// # Safety
/// Array arguments must hold the stated number of doubles.
#[no_mangle]
pub unsafe extern "C" fn skc_solve(
    p: *const SkcProblem,
    y: *const f64,
    y_len: usize,
    x0: *const f64,
    x0_len: usize,
    x_out: *mut f64,
    x_out_len: usize,
    info: *mut SkcSolveInfo,
) -> SkcStatus {
    guard(|| {
        let c = &problem_ref(p)?.compiled;
        let (n, m) = dims(c)?;
        let y = vec_arg(y, y_len, m, "y")?;
        let x0 = if x0.is_null() { c.x0() } else { vec_arg(x0, x0_len, n, "x0")? };
        let res = solve(&c.problem()?, &y, &x0, &c.config.solver)?;
        write_out(&res.x_c, x_out, x_out_len, "x_out")?;
        if let Some(info) = info.as_mut() {
            *info = SkcSolveInfo {
                iterations: res.iterations as u32,
                converged: res.converged as i32,
                final_residual: res.residual_history.last().copied().unwrap_or(f64::NAN),
                hessian_condition: res.hessian.condition_number,
            };
        }
        Ok(SkcStatus::Ok)
    })
}

fn family_base(c: &Compiled, y: &Vector) -> Result<Vector, Fail> {
    let fam = c.family().map_err(|_| fail(SkcStatus::ConfigError, "config is not a family"))?;
    Ok(solve(&fam.problem_at(Member::First, 0.0)?, y, &c.x0(), &c.config.solver)?.x_c)
}

/// Measures the contact order of the two solution families over `y` and
/// writes the `r`-residual (length `n`) to `residual_out`.
///
/// # Safety
/// Array arguments must hold the stated number of doubles.
#[no_mangle]
pub unsafe extern "C" fn skc_gamma_contact(
    p: *const SkcProblem,
    y: *const f64,
    y_len: usize,
    r: u32,
    residual_out: *mut f64,
    residual_len: usize,
    info: *mut SkcContactInfo,
) -> SkcStatus {
    guard(|| {
        let c = &problem_ref(p)?.compiled;
        let (_, m) = dims(c)?;
        let y = vec_arg(y, y_len, m, "y")?;
        let x_c = family_base(c, &y)?;
        let settings = GammaSettings { h_seq: c.h_seq(), ..GammaSettings::default() };
        let rep = verify_gamma_contact(c.family()?, &y, r as usize, &x_c, &settings)?;
        write_out(&rep.estimate.residual, residual_out, residual_len, "residual_out")?;
        if let Some(info) = info.as_mut() {
            *info = SkcContactInfo {
                slope: rep.estimate.r_est.unwrap_or(f64::NAN),
                machine_limited: rep.estimate.is_machine_limited() as i32,
                passed: rep.passed as i32,
            };
        }
        Ok(SkcStatus::Ok)
    })
}

/// Predicts the `r`-residual of the solution family from the data residuals
/// alone, without solving the perturbed problems.
///
/// # Safety
/// Array arguments must hold the stated number of doubles.
#[no_mangle]
pub unsafe extern "C" fn skc_predict_residual(
    p: *const SkcProblem,
    y: *const f64,
    y_len: usize,
    r: u32,
    out: *mut f64,
    out_len: usize,
    condition: *mut f64,
) -> SkcStatus {
    guard(|| {
        let c = &problem_ref(p)?.compiled;
        let (_, m) = dims(c)?;
        let y = vec_arg(y, y_len, m, "y")?;
        let x_c = family_base(c, &y)?;
        let sys = assemble_residual_system(c.family()?, &x_c, &y, r as usize, AssemblyOptions::default())?;
        let u = predict_solution_residual(&sys)?;
        if !u.iter().all(|v| v.is_finite()) {
            return Err(fail(SkcStatus::NumericalError, "prediction is not finite"));
        }
        write_out(&u, out, out_len, "out")?;
        if let Some(c) = condition.as_mut() {
            *c = sys.condition;
        }
        Ok(SkcStatus::Ok)
    })
}

/// Runs the acceptance criteria against the built-in configs. When
/// `report_json` is non-null it receives the JSON report (no timestamp),
/// to be released with `skc_string_free`. Returns `CheckFailed` when any
/// criterion fails.
///
/// # Safety
/// `report_json` must be null or a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn skc_verify(suite: SkcSuite, seed: u64, report_json: *mut *mut c_char) -> SkcStatus {
    guard(|| {
        let suite = match suite {
            SkcSuite::All => Suite::All,
            SkcSuite::Solver => Suite::Solver,
            SkcSuite::Contact => Suite::Contact,
            SkcSuite::Variation => Suite::Variation,
        };
        let settings = AcceptanceSettings { seed, ..AcceptanceSettings::default() };
        let criteria = run_suite(suite, &settings, |_| {})?;
        let report = suite_report(suite, &settings, &criteria)?;
        if !report_json.is_null() {
            let text = CString::new(report.to_json()).map_err(|_| fail(SkcStatus::NumericalError, "report holds NUL"))?;
            *report_json = text.into_raw();
        }
        if report.all_passed() {
            Ok(SkcStatus::Ok)
        } else {
            let failed: Vec<String> = criteria.iter().filter(|c| !c.passed).map(|c| c.id.to_string()).collect();
            Err(fail(SkcStatus::CheckFailed, format!("failing criteria: {}", failed.join(", "))))
        }
    })
}

/// Releases a string returned by the library. Null is ignored.
///
/// # Safety
/// `s` must come from this library and not be freed twice.
#[no_mangle]
pub unsafe extern "C" fn skc_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}
