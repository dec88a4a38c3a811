//! C ABI over the cuspwave library.
//!
//! Every function returns a [`CwStatus`]; on failure the message is kept in a
//! thread-local slot readable through [`cw_last_error_message`]. Problems and
//! branches are opaque heap handles released by their `*_free` functions.

use std::cell::RefCell;
use std::ffi::{c_char, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use cuspwave::continuation::{branch_follow, ContinuationConfig, Termination};
use cuspwave::kernel::{Kernel, KernelSpec};
use cuspwave::nonlinearity::{NonlinearityKind, NonlinearitySpec};
use cuspwave::spectral::SymbolSpec;
use cuspwave::steady::{BranchPoint, SteadyProblem};
use cuspwave::Error;

/// Result code of every call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CwStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    Domain = 3,
    Singularity = 4,
    Accuracy = 5,
    Aliasing = 6,
    Convergence = 7,
    NearSingular = 8,
    InsufficientData = 9,
    Unsupported = 10,
    Config = 11,
    Io = 12,
    /// The output buffer is too small.
    BufferTooSmall = 13,
    Panic = 14,
    Other = 15,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CwKind {
    Abs = 0,
    Sgn = 1,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CwTermination {
    CrestReached = 0,
    StepFloor = 1,
    MaxSteps = 2,
    Error = 3,
}

/// Scalar fields of one branch point.
#[repr(C)]
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct CwPoint {
    pub s: f64,
    pub c: f64,
    pub max_value: f64,
    pub mu_eps: f64,
    pub residual_norm: f64,
}

/// Discretised steady problem with a negative-order symbol.
pub struct CwProblem {
    problem: SteadyProblem,
}

/// Points of a followed branch.
pub struct CwBranch {
    points: Vec<BranchPoint>,
    termination: Termination,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_last_error(message: String) {
    let message = CString::new(message.replace('\0', " ")).expect("interior NULs removed");
    LAST_ERROR.with(|slot| *slot.borrow_mut() = Some(message));
}

fn status_of(error: &Error) -> CwStatus {
    match error.root() {
        Error::Domain { .. } | Error::GridSize { .. } | Error::NonsmoothPoint { .. } => CwStatus::Domain,
        Error::Singularity { .. } => CwStatus::Singularity,
        Error::Accuracy { .. } => CwStatus::Accuracy,
        Error::Aliasing { .. } => CwStatus::Aliasing,
        Error::Convergence { .. } | Error::RootFind(_) => CwStatus::Convergence,
        Error::NearSingular { .. } => CwStatus::NearSingular,
        Error::InsufficientData { .. } => CwStatus::InsufficientData,
        Error::Unsupported(_) => CwStatus::Unsupported,
        Error::Config { .. } | Error::Parse { .. } => CwStatus::Config,
        Error::Io { .. } => CwStatus::Io,
        _ => CwStatus::Other,
    }
}

/// Runs `body`, mapping errors and panics to status codes.
fn guarded(body: impl FnOnce() -> Result<(), (CwStatus, String)>) -> CwStatus {
    match catch_unwind(AssertUnwindSafe(body)) {
        Ok(Ok(())) => {
            LAST_ERROR.with(|slot| *slot.borrow_mut() = None);
            CwStatus::Ok
        }
        Ok(Err((status, message))) => {
            set_last_error(message);
            status
        }
        Err(_) => {
            set_last_error("internal panic".into());
            CwStatus::Panic
        }
    }
}

fn lib(error: Error) -> (CwStatus, String) {
    (status_of(&error), error.to_string())
}

fn null(name: &str) -> (CwStatus, String) {
    (CwStatus::NullPointer, format!("`{name}` is null"))
}

/// Copies the last error message of this thread into `buffer` (NUL
/// terminated) and returns the length it needs including the NUL; 0 when
/// there is no error. Nothing is written when `capacity` is too small.
///
/// # Safety
/// `buffer` must be null or point to `capacity` writable bytes.
#[no_mangle]
pub unsafe extern "C" fn cw_last_error_message(buffer: *mut c_char, capacity: usize) -> usize {
    LAST_ERROR.with(|slot| match slot.borrow().as_ref() {
        None => 0,
        Some(message) => {
            let bytes = message.as_bytes_with_nul();
            if !buffer.is_null() && capacity >= bytes.len() {
                ptr::copy_nonoverlapping(bytes.as_ptr() as *const c_char, buffer, bytes.len());
            }
            bytes.len()
        }
    })
}

/// `K_α(x)` by quadrature, with its error estimate.
///
/// # Safety
/// `value` and `error` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn cw_kernel_eval(alpha: f64, x: f64, value: *mut f64, error: *mut f64) -> CwStatus {
    guarded(|| {
        if value.is_null() {
            return Err(null("value"));
        }
        if error.is_null() {
            return Err(null("error"));
        }
        let estimate = Kernel::new(KernelSpec::new(alpha))
            .and_then(|k| k.eval(x))
            .map_err(lib)?;
        *value = estimate.value;
        *error = estimate.error;
        Ok(())
    })
}

/// `‖K_α‖₁`.
///
/// # Safety
/// `value` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn cw_kernel_l1_norm(alpha: f64, value: *mut f64) -> CwStatus {
    guarded(|| {
        if value.is_null() {
            return Err(null("value"));
        }
        let norm = Kernel::new(KernelSpec::new(alpha))
            .and_then(|k| k.l1_norm())
            .map_err(lib)?;
        *value = norm.value;
        Ok(())
    })
}

/// Creates a problem with symbol `|k|^{-α}`, `m` modes and `n` grid nodes.
///
/// # Safety
/// `out` must be valid for writes; the handle is released with
/// [`cw_problem_free`].
#[no_mangle]
pub unsafe extern "C" fn cw_problem_new(
    alpha: f64,
    kind: CwKind,
    p: f64,
    eps: f64,
    m: usize,
    n: usize,
    out: *mut *mut CwProblem,
) -> CwStatus {
    guarded(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        let kind = match kind {
            CwKind::Abs => NonlinearityKind::Abs,
            CwKind::Sgn => NonlinearityKind::Sgn,
        };
        let problem =
            SteadyProblem::new(SymbolSpec::neg_order(alpha), NonlinearitySpec::new(kind, p, eps), n, m).map_err(lib)?;
        *out = Box::into_raw(Box::new(CwProblem { problem }));
        Ok(())
    })
}

/// Releases a problem; null is ignored.
///
/// # Safety
/// `problem` must come from [`cw_problem_new`] and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn cw_problem_free(problem: *mut CwProblem) {
    if !problem.is_null() {
        drop(Box::from_raw(problem));
    }
}

/// Follows branch `k` with default controls except the crest margin.
///
/// # Safety
/// `problem` must be a live handle and `out` valid for writes; the branch is
/// released with [`cw_branch_free`].
#[no_mangle]
pub unsafe extern "C" fn cw_branch_follow(
    problem: *const CwProblem,
    k: usize,
    crest_margin: f64,
    out: *mut *mut CwBranch,
) -> CwStatus {
    guarded(|| {
        let problem = problem.as_ref().ok_or_else(|| null("problem"))?;
        if out.is_null() {
            return Err(null("out"));
        }
        let config = ContinuationConfig {
            mode: k,
            crest_margin,
            ..ContinuationConfig::default()
        };
        config.validate().map_err(lib)?;
        let branch = branch_follow(&problem.problem, &config).map_err(lib)?;
        *out = Box::into_raw(Box::new(CwBranch {
            points: branch.points,
            termination: branch.terminated_reason,
        }));
        Ok(())
    })
}

/// Number of points on the branch; 0 for null.
///
/// # Safety
/// `branch` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn cw_branch_len(branch: *const CwBranch) -> usize {
    branch.as_ref().map_or(0, |b| b.points.len())
}

/// Why the branch stopped.
///
/// # Safety
/// `branch` must be a live handle and `out` valid for writes.
#[no_mangle]
pub unsafe extern "C" fn cw_branch_termination(branch: *const CwBranch, out: *mut CwTermination) -> CwStatus {
    guarded(|| {
        let branch = branch.as_ref().ok_or_else(|| null("branch"))?;
        if out.is_null() {
            return Err(null("out"));
        }
        *out = match branch.termination {
            Termination::CrestReached => CwTermination::CrestReached,
            Termination::StepFloor => CwTermination::StepFloor,
            Termination::MaxSteps => CwTermination::MaxSteps,
            Termination::Error => CwTermination::Error,
        };
        Ok(())
    })
}

fn point_at(branch: &CwBranch, index: usize) -> Result<&BranchPoint, (CwStatus, String)> {
    branch.points.get(index).ok_or_else(|| {
        (
            CwStatus::InvalidArgument,
            format!("index {index} out of range for {} points", branch.points.len()),
        )
    })
}

/// Scalar summary of point `index`.
///
/// # Safety
/// `branch` must be a live handle and `out` valid for writes.
#[no_mangle]
pub unsafe extern "C" fn cw_branch_point(branch: *const CwBranch, index: usize, out: *mut CwPoint) -> CwStatus {
    guarded(|| {
        let branch = branch.as_ref().ok_or_else(|| null("branch"))?;
        if out.is_null() {
            return Err(null("out"));
        }
        let p = point_at(branch, index)?;
        *out = CwPoint {
            s: p.s,
            c: p.c,
            max_value: p.max_value,
            mu_eps: p.mu_eps,
            residual_norm: p.residual_norm,
        };
        Ok(())
    })
}

/// Grid values of point `index` on `problem`'s grid, written to `values`.
///
/// # Safety
/// `problem` and `branch` must be live handles and `values` must point to
/// `len` writable doubles; `len` must equal the grid size.
#[no_mangle]
pub unsafe extern "C" fn cw_branch_wave(
    problem: *const CwProblem,
    branch: *const CwBranch,
    index: usize,
    values: *mut f64,
    len: usize,
) -> CwStatus {
    guarded(|| {
        let problem = problem.as_ref().ok_or_else(|| null("problem"))?;
        let branch = branch.as_ref().ok_or_else(|| null("branch"))?;
        if values.is_null() {
            return Err(null("values"));
        }
        let n = problem.problem.grid.n();
        if len < n {
            return Err((CwStatus::BufferTooSmall, format!("need {n} values, buffer holds {len}")));
        }
        let wave = problem.problem.values(&point_at(branch, index)?.phi).map_err(lib)?;
        ptr::copy_nonoverlapping(wave.as_ptr(), values, n);
        Ok(())
    })
}

/// Releases a branch; null is ignored.
///
/// # Safety
/// `branch` must come from [`cw_branch_follow`] and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn cw_branch_free(branch: *mut CwBranch) {
    if !branch.is_null() {
        drop(Box::from_raw(branch));
    }
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn cw_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr() as *const c_char
}
