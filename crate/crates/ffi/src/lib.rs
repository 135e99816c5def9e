//! C ABI for the `proxnewton` solvers.
//!
//! Problems and reports are opaque heap handles created and released through
//! this interface. Every fallible call returns a [`PnError`]; on failure a
//! message is available from [`pn_last_error_message`] on the same thread.
//! Panics never cross the boundary.

#![allow(clippy::missing_safety_doc)]

use std::cell::RefCell;
use std::ffi::{CStr, CString};
use std::os::raw::{c_char, c_int};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::ptr;

use proxnewton::io::write_trace;
use proxnewton::problems::{
    make_inverse_covariance, make_lasso, make_logistic, InverseCovarianceProblem, LogisticL1Problem,
    QuadraticL1Problem, SyntheticSpec,
};
use proxnewton::{solve, CompositeProblem, Matrix, Method, SolveReport, SolveStatus, SolverOptions, SubproblemPolicy};

/// Result of an interface call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PnError {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    /// A matrix that must be positive definite is not.
    NotPositiveDefinite = 3,
    Io = 4,
    /// Internal failure; the message has details.
    Internal = 5,
}

/// Outcome of a solve.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PnSolveStatus {
    Converged = 0,
    MaxIterations = 2,
    LineSearchFailed = 3,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PnMethod {
    ProxNewton = 0,
    ProxBfgs = 1,
    ProxLbfgs = 2,
    Fista = 3,
    Sparsa = 4,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PnPolicy {
    Adaptive = 0,
    Exact = 1,
    FixedIterations = 2,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PnProblemKind {
    Lasso = 0,
    Logistic = 1,
    InverseCovariance = 2,
}

/// Solver settings. Initialize with [`pn_options_default`].
#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct PnOptions {
    pub method: PnMethod,
    /// L-BFGS memory; used with `ProxLbfgs` only.
    pub lbfgs_memory: usize,
    pub policy: PnPolicy,
    /// Inner iteration count for `FixedIterations`.
    pub fixed_count: usize,
    pub tol: f64,
    pub max_outer: usize,
    /// Sufficient-decrease constant of the line search.
    pub alpha: f64,
    pub seed: u64,
    /// Nonzero to record wall-clock times in the trace.
    pub record_clock: c_int,
}

/// Opaque problem handle.
pub struct PnProblem {
    inner: CompositeProblem,
}

/// Opaque solve report handle.
pub struct PnReport {
    inner: SolveReport,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: impl Into<String>) {
    let text = msg.into().replace('\0', " ");
    let c = CString::new(text).expect("interior NULs removed");
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn clear_error() {
    LAST_ERROR.with(|e| *e.borrow_mut() = None);
}

fn code_for(e: &proxnewton::Error) -> PnError {
    use proxnewton::Error as E;
    match e {
        E::Contract(_) | E::DimensionMismatch { .. } | E::Parse { .. } => PnError::InvalidArgument,
        E::NotPositiveDefinite => PnError::NotPositiveDefinite,
        E::Io { .. } | E::Json(_) => PnError::Io,
        _ => PnError::Internal,
    }
}

/// Runs `f`, recording errors and converting panics.
fn guard<F>(f: F) -> PnError
where
    F: FnOnce() -> Result<(), (PnError, String)>,
{
    clear_error();
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => PnError::Ok,
        Ok(Err((code, msg))) => {
            set_error(msg);
            code
        }
        Err(payload) => {
            let msg = payload
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| payload.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "unknown panic".into());
            set_error(format!("panic: {msg}"));
            PnError::Internal
        }
    }
}

fn lib_err(e: proxnewton::Error) -> (PnError, String) {
    (code_for(&e), e.to_string())
}

fn null(what: &str) -> (PnError, String) {
    (PnError::NullPointer, format!("{what} is NULL"))
}

fn bad(msg: impl Into<String>) -> (PnError, String) {
    (PnError::InvalidArgument, msg.into())
}

unsafe fn slice<'a>(p: *const f64, len: usize, what: &str) -> Result<&'a [f64], (PnError, String)> {
    if len == 0 {
        return Ok(&[]);
    }
    if p.is_null() {
        return Err(null(what));
    }
    Ok(std::slice::from_raw_parts(p, len))
}

unsafe fn emit_problem(out: *mut *mut PnProblem, problem: CompositeProblem) {
    *out = Box::into_raw(Box::new(PnProblem { inner: problem }));
}

/// Last error message on this thread, or NULL. Valid until the next call
/// into this library from the same thread.
#[no_mangle]
pub extern "C" fn pn_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn pn_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr() as *const c_char
}

/// Fills `out` with the default settings (ProxNewton, adaptive stopping,
/// tol 1e-8, 500 outer iterations).
#[no_mangle]
pub unsafe extern "C" fn pn_options_default(out: *mut PnOptions) -> PnError {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        let d = SolverOptions::default();
        *out = PnOptions {
            method: PnMethod::ProxNewton,
            lbfgs_memory: proxnewton::driver::DEFAULT_LBFGS_MEMORY,
            policy: PnPolicy::Adaptive,
            fixed_count: proxnewton::subproblem::DEFAULT_FIXED_COUNT,
            tol: d.tol,
            max_outer: d.max_outer,
            alpha: d.linesearch.alpha,
            seed: d.seed,
            record_clock: 1,
        };
        Ok(())
    })
}

/// Lasso `||Ax - b||² / 2 + lambda ||x||_1`; `a` is `rows × cols`, row-major.
#[no_mangle]
pub unsafe extern "C" fn pn_problem_lasso(
    a: *const f64,
    rows: usize,
    cols: usize,
    b: *const f64,
    lambda: f64,
    out: *mut *mut PnProblem,
) -> PnError {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        let n = rows.checked_mul(cols).ok_or_else(|| bad("rows * cols overflows"))?;
        let a = slice(a, n, "a")?;
        let b = slice(b, rows, "b")?;
        let p = QuadraticL1Problem::new(
            Matrix::from_row_slice(rows, cols, a),
            proxnewton::Vector::from_column_slice(b),
            lambda,
        )
        .map_err(lib_err)?;
        emit_problem(out, p.composite());
        Ok(())
    })
}

/// ℓ1-regularized logistic regression; `x` is `rows × cols` row-major,
/// `y` holds labels in `{0,1}` or `{-1,+1}`.
#[no_mangle]
pub unsafe extern "C" fn pn_problem_logistic(
    x: *const f64,
    rows: usize,
    cols: usize,
    y: *const f64,
    lambda: f64,
    ridge: f64,
    out: *mut *mut PnProblem,
) -> PnError {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        let n = rows.checked_mul(cols).ok_or_else(|| bad("rows * cols overflows"))?;
        let x = slice(x, n, "x")?;
        let y = slice(y, rows, "y")?;
        let p = LogisticL1Problem::new(Matrix::from_row_slice(rows, cols, x), y, lambda, ridge).map_err(lib_err)?;
        emit_problem(out, p.composite());
        Ok(())
    })
}

/// Sparse inverse covariance estimation from an `order × order` sample
/// covariance (row-major). The iterate is the row-major vectorized matrix.
#[no_mangle]
pub unsafe extern "C" fn pn_problem_inverse_covariance(
    sigma: *const f64,
    order: usize,
    lambda: f64,
    out: *mut *mut PnProblem,
) -> PnError {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        let n = order.checked_mul(order).ok_or_else(|| bad("order² overflows"))?;
        let s = slice(sigma, n, "sigma")?;
        let p = InverseCovarianceProblem::new(Matrix::from_row_slice(order, order, s), lambda).map_err(lib_err)?;
        emit_problem(out, p.composite());
        Ok(())
    })
}

/// Seeded synthetic instance: `n` features (matrix order for inverse
/// covariance) and `s` samples. `ridge` applies to logistic only.
#[no_mangle]
pub unsafe extern "C" fn pn_problem_synthetic(
    kind: PnProblemKind,
    seed: u64,
    n: usize,
    s: usize,
    lambda: f64,
    ridge: f64,
    out: *mut *mut PnProblem,
) -> PnError {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        let problem = match kind {
            PnProblemKind::Lasso => make_lasso(&SyntheticSpec::lasso(seed, n, s), lambda).map(|p| p.composite()),
            PnProblemKind::Logistic => {
                make_logistic(&SyntheticSpec::logistic(seed, n, s), lambda, ridge).map(|p| p.composite())
            }
            PnProblemKind::InverseCovariance => {
                make_inverse_covariance(&SyntheticSpec::inverse_covariance(seed, n, s), lambda).map(|p| p.composite())
            }
        }
        .map_err(lib_err)?;
        emit_problem(out, problem);
        Ok(())
    })
}

/// Number of unknowns, or 0 for NULL.
#[no_mangle]
pub unsafe extern "C" fn pn_problem_dim(problem: *const PnProblem) -> usize {
    problem.as_ref().map_or(0, |p| p.inner.dim())
}

/// Releases a problem. NULL is ignored.
#[no_mangle]
pub unsafe extern "C" fn pn_problem_free(problem: *mut PnProblem) {
    if !problem.is_null() {
        drop(Box::from_raw(problem));
    }
}

fn to_options(o: &PnOptions) -> Result<SolverOptions, (PnError, String)> {
    let method = match o.method {
        PnMethod::ProxNewton => Method::ProxNewton,
        PnMethod::ProxBfgs => Method::ProxBfgs,
        PnMethod::ProxLbfgs => Method::ProxLbfgs { memory: o.lbfgs_memory },
        PnMethod::Fista => Method::Fista,
        PnMethod::Sparsa => Method::Sparsa,
    };
    let policy = match o.policy {
        PnPolicy::Adaptive => SubproblemPolicy::adaptive(),
        PnPolicy::Exact => SubproblemPolicy::exact(),
        PnPolicy::FixedIterations => SubproblemPolicy::fixed(o.fixed_count),
    };
    let mut opts = SolverOptions::new(method, policy);
    opts.tol = o.tol;
    opts.max_outer = o.max_outer;
    opts.linesearch.alpha = o.alpha;
    opts.seed = o.seed;
    opts.record_clock = o.record_clock != 0;
    opts.validate().map_err(lib_err)?;
    Ok(opts)
}

/// Runs the solver. `options` may be NULL for the defaults. On success
/// `*out` receives a report to be released with [`pn_report_free`]; a
/// solve that stops without converging is still a success, see
/// [`pn_report_status`].
#[no_mangle]
pub unsafe extern "C" fn pn_solve(
    problem: *const PnProblem,
    options: *const PnOptions,
    out: *mut *mut PnReport,
) -> PnError {
    guard(|| {
        let problem = problem.as_ref().ok_or_else(|| null("problem"))?;
        if out.is_null() {
            return Err(null("out"));
        }
        let opts = match options.as_ref() {
            Some(o) => to_options(o)?,
            None => SolverOptions::default(),
        };
        let report = solve(&problem.inner, &opts).map_err(lib_err)?;
        *out = Box::into_raw(Box::new(PnReport { inner: report }));
        Ok(())
    })
}

/// Status of a finished solve; `LineSearchFailed` for NULL.
#[no_mangle]
pub unsafe extern "C" fn pn_report_status(report: *const PnReport) -> PnSolveStatus {
    match report.as_ref().map(|r| r.inner.status) {
        Some(SolveStatus::Converged) => PnSolveStatus::Converged,
        Some(SolveStatus::MaxIterations) => PnSolveStatus::MaxIterations,
        Some(SolveStatus::LineSearchFailed) | None => PnSolveStatus::LineSearchFailed,
    }
}

#[no_mangle]
pub unsafe extern "C" fn pn_report_iterations(report: *const PnReport) -> usize {
    report.as_ref().map_or(0, |r| r.inner.iterations())
}

/// Final objective value; NaN for NULL.
#[no_mangle]
pub unsafe extern "C" fn pn_report_objective(report: *const PnReport) -> f64 {
    report.as_ref().map_or(f64::NAN, |r| r.inner.f_final)
}

/// Final optimality measure `||G_f(x)||`; NaN for NULL.
#[no_mangle]
pub unsafe extern "C" fn pn_report_optimality(report: *const PnReport) -> f64 {
    report.as_ref().map_or(f64::NAN, |r| r.inner.norm_gf_final)
}

/// Copies the final iterate into `buf`, which must hold `len` values with
/// `len` equal to the problem dimension.
#[no_mangle]
pub unsafe extern "C" fn pn_report_solution(report: *const PnReport, buf: *mut f64, len: usize) -> PnError {
    guard(|| {
        let r = report.as_ref().ok_or_else(|| null("report"))?;
        let x = &r.inner.x_final;
        if len != x.len() {
            return Err(bad(format!("buffer holds {len} values, solution has {}", x.len())));
        }
        if len > 0 && buf.is_null() {
            return Err(null("buf"));
        }
        if len > 0 {
            std::slice::from_raw_parts_mut(buf, len).copy_from_slice(x.as_slice());
        }
        Ok(())
    })
}

/// Writes the trace CSV to `path` and a JSON summary next to it (`.json`
/// extension).
#[no_mangle]
pub unsafe extern "C" fn pn_report_write_trace(report: *const PnReport, path: *const c_char) -> PnError {
    guard(|| {
        let r = report.as_ref().ok_or_else(|| null("report"))?;
        if path.is_null() {
            return Err(null("path"));
        }
        let path = CStr::from_ptr(path)
            .to_str()
            .map_err(|_| bad("path is not valid UTF-8"))?;
        write_trace(&r.inner, Path::new(path)).map_err(lib_err)
    })
}

/// Releases a report. NULL is ignored.
#[no_mangle]
pub unsafe extern "C" fn pn_report_free(report: *mut PnReport) {
    if !report.is_null() {
        drop(Box::from_raw(report));
    }
}
