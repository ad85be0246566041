//! C interface to `betacrit`.
//!
//! Every function returns a status code (`BC_OK` on success). On failure the
//! message is kept per thread and can be fetched with `bc_last_error_message`.
//! Patches are opaque and owned by the caller once returned; release them with
//! `bc_patch_free`.

#![allow(clippy::missing_safety_doc)]

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use betacrit::diagnostics::diagnostics_record;
use betacrit::solver::{harmonic_extension, newton_run, LinearSolver, SolverConfig};
use betacrit::{residual_field, surface_fields, Error, GraphPatch, GridSpec, Surface};

pub const BC_OK: i32 = 0;
pub const BC_NULL_POINTER: i32 = 1;
pub const BC_INVALID_ARGUMENT: i32 = 2;
pub const BC_NON_SYMPLECTIC: i32 = 3;
pub const BC_COS_FLOOR_VIOLATED: i32 = 4;
pub const BC_MAX_ITERS: i32 = 5;
pub const BC_STALLED: i32 = 6;
pub const BC_SINGULAR_JACOBIAN: i32 = 7;
pub const BC_BALL_ESCAPES: i32 = 8;
pub const BC_PANIC: i32 = 9;
pub const BC_INTERNAL: i32 = 10;

pub const BC_LINEAR_BANDED: i32 = 0;
pub const BC_LINEAR_DENSE: i32 = 1;

/// Opaque graph patch.
pub struct BcPatch(GraphPatch);

#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct BcSolverConfig {
    pub beta: f64,
    pub tol_residual: f64,
    pub max_newton_iters: u32,
    pub damping: f64,
    pub max_backtracks: u32,
    pub jacobian_fd_eps: f64,
    pub cos_floor: f64,
    /// `BC_LINEAR_BANDED` or `BC_LINEAR_DENSE`.
    pub linear_solver: i32,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, Default)]
pub struct BcSolveReport {
    pub iterations: u32,
    pub residual_sup: f64,
    pub residual_l2: f64,
    pub min_cos_alpha: f64,
    pub converged: bool,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, Default)]
pub struct BcDiagnostics {
    pub beta: f64,
    pub min_cos_alpha: f64,
    pub lq_mass: f64,
    pub total_a2: f64,
    pub total_h2: f64,
    pub sup_a: f64,
    pub area: f64,
    pub l_beta: f64,
    pub gauss_res: f64,
    pub ealpha_res: f64,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(msg: &str) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = c);
}

fn code(e: &Error) -> i32 {
    match e {
        Error::NonSymplectic { .. } => BC_NON_SYMPLECTIC,
        Error::CosFloorViolated { .. } => BC_COS_FLOOR_VIOLATED,
        Error::MaxItersExceeded { .. } => BC_MAX_ITERS,
        Error::Stalled { .. } | Error::StepUnderflow { .. } => BC_STALLED,
        Error::SingularJacobian { .. } => BC_SINGULAR_JACOBIAN,
        Error::BallEscapesPatch { .. } => BC_BALL_ESCAPES,
        Error::InvalidGrid(_)
        | Error::InvalidArgument(_)
        | Error::IndexOutOfRange { .. }
        | Error::Range { .. }
        | Error::Parse { .. }
        | Error::UnknownKey { .. } => BC_INVALID_ARGUMENT,
        _ => BC_INTERNAL,
    }
}

enum Fail {
    Null(&'static str),
    Lib(Error),
}

impl From<Error> for Fail {
    fn from(e: Error) -> Self {
        Fail::Lib(e)
    }
}

fn guard(body: impl FnOnce() -> Result<(), Fail>) -> i32 {
    match catch_unwind(AssertUnwindSafe(body)) {
        Ok(Ok(())) => BC_OK,
        Ok(Err(Fail::Null(what))) => {
            set_error(&format!("null pointer: {what}"));
            BC_NULL_POINTER
        }
        Ok(Err(Fail::Lib(e))) => {
            set_error(&e.to_string());
            code(&e)
        }
        Err(p) => {
            let msg = p
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| p.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "unknown panic".into());
            set_error(&format!("panic: {msg}"));
            BC_PANIC
        }
    }
}

unsafe fn deref<'a, T>(p: *const T, what: &'static str) -> Result<&'a T, Fail> {
    p.as_ref().ok_or(Fail::Null(what))
}

unsafe fn out<'a, T>(p: *mut T, what: &'static str) -> Result<&'a mut T, Fail> {
    p.as_mut().ok_or(Fail::Null(what))
}

fn boxed(p: GraphPatch) -> *mut BcPatch {
    Box::into_raw(Box::new(BcPatch(p)))
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn bc_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Copy the calling thread's last error message into `buf` (NUL-terminated,
/// truncated to `len`). Returns the full message length excluding the NUL.
#[no_mangle]
pub unsafe extern "C" fn bc_last_error_message(buf: *mut c_char, len: usize) -> usize {
    LAST_ERROR.with(|e| {
        let e = e.borrow();
        let bytes = e.as_bytes();
        if !buf.is_null() && len > 0 {
            let n = bytes.len().min(len - 1);
            ptr::copy_nonoverlapping(bytes.as_ptr().cast(), buf, n);
            *buf.add(n) = 0;
        }
        bytes.len()
    })
}

/// Sample a named surface family, e.g. `"shear(0.3)+bump(0.3,1)"`, on
/// `[xmin, xmax] × [ymin, ymax]` with `nx × ny` nodes.
#[no_mangle]
pub unsafe extern "C" fn bc_patch_from_family(
    spec: *const c_char,
    nx: usize,
    ny: usize,
    xmin: f64,
    xmax: f64,
    ymin: f64,
    ymax: f64,
    out_patch: *mut *mut BcPatch,
) -> i32 {
    guard(|| {
        let spec = CStr::from_ptr(deref(spec, "spec")?)
            .to_str()
            .map_err(|e| Error::InvalidArgument(format!("spec is not UTF-8: {e}")))?;
        let slot = out(out_patch, "out_patch")?;
        let grid = GridSpec::rect(nx, ny, (xmin, xmax), (ymin, ymax))?;
        *slot = boxed(Surface::parse(spec)?.patch(grid)?);
        Ok(())
    })
}

/// Build a patch from row-major nodal arrays of length `nx * ny`.
#[no_mangle]
pub unsafe extern "C" fn bc_patch_from_arrays(
    nx: usize,
    ny: usize,
    hx: f64,
    hy: f64,
    x0: f64,
    y0: f64,
    f: *const f64,
    g: *const f64,
    out_patch: *mut *mut BcPatch,
) -> i32 {
    guard(|| {
        deref(f, "f")?;
        deref(g, "g")?;
        let slot = out(out_patch, "out_patch")?;
        let grid = GridSpec::new(nx, ny, hx, hy, (x0, y0))?;
        let n = grid.len();
        let fv = std::slice::from_raw_parts(f, n).to_vec();
        let gv = std::slice::from_raw_parts(g, n).to_vec();
        *slot = boxed(GraphPatch::from_arrays(grid, fv, gv)?);
        Ok(())
    })
}

/// Release a patch. Null is ignored.
#[no_mangle]
pub unsafe extern "C" fn bc_patch_free(patch: *mut BcPatch) {
    if !patch.is_null() {
        let _ = catch_unwind(AssertUnwindSafe(|| drop(Box::from_raw(patch))));
    }
}

#[no_mangle]
pub unsafe extern "C" fn bc_patch_dims(patch: *const BcPatch, nx: *mut usize, ny: *mut usize) -> i32 {
    guard(|| {
        let p = &deref(patch, "patch")?.0;
        *out(nx, "nx")? = p.grid().nx;
        *out(ny, "ny")? = p.grid().ny;
        Ok(())
    })
}

/// Copy nodal values into caller buffers of length `len`, which must equal `nx * ny`.
#[no_mangle]
pub unsafe extern "C" fn bc_patch_get_values(patch: *const BcPatch, f: *mut f64, g: *mut f64, len: usize) -> i32 {
    guard(|| {
        let p = &deref(patch, "patch")?.0;
        out(f, "f")?;
        out(g, "g")?;
        if len != p.grid().len() {
            return Err(Error::InvalidArgument(format!("buffer length {len}, patch has {} nodes", p.grid().len())).into());
        }
        ptr::copy_nonoverlapping(p.f().as_ptr(), f, len);
        ptr::copy_nonoverlapping(p.g().as_ptr(), g, len);
        Ok(())
    })
}

/// Replace the interior by the discrete harmonic extension of the boundary values.
#[no_mangle]
pub unsafe extern "C" fn bc_harmonic_extension(patch: *const BcPatch, out_patch: *mut *mut BcPatch) -> i32 {
    guard(|| {
        let p = &deref(patch, "patch")?.0;
        let slot = out(out_patch, "out_patch")?;
        *slot = boxed(harmonic_extension(p)?);
        Ok(())
    })
}

/// Default solver settings at the given beta.
#[no_mangle]
pub extern "C" fn bc_solver_config_default(beta: f64) -> BcSolverConfig {
    let c = SolverConfig::with_beta(beta);
    BcSolverConfig {
        beta: c.beta,
        tol_residual: c.tol_residual,
        max_newton_iters: c.max_newton_iters as u32,
        damping: c.damping,
        max_backtracks: c.max_backtracks as u32,
        jacobian_fd_eps: c.jacobian_fd_eps,
        cos_floor: c.cos_floor,
        linear_solver: match c.linear_solver {
            LinearSolver::Banded => BC_LINEAR_BANDED,
            LinearSolver::Dense => BC_LINEAR_DENSE,
        },
    }
}

fn solver_config(c: &BcSolverConfig) -> Result<SolverConfig, Error> {
    let linear_solver = match c.linear_solver {
        BC_LINEAR_BANDED => LinearSolver::Banded,
        BC_LINEAR_DENSE => LinearSolver::Dense,
        other => return Err(Error::InvalidArgument(format!("unknown linear solver {other}"))),
    };
    let config = SolverConfig {
        beta: c.beta,
        tol_residual: c.tol_residual,
        max_newton_iters: c.max_newton_iters as usize,
        damping: c.damping,
        max_backtracks: c.max_backtracks as usize,
        jacobian_fd_eps: c.jacobian_fd_eps,
        cos_floor: c.cos_floor,
        linear_solver,
    };
    config.validate()?;
    Ok(config)
}

/// Newton solve from `patch` as the initial iterate. `report` (optional) is
/// filled even when the solve fails; `out_patch` is set only on success.
#[no_mangle]
pub unsafe extern "C" fn bc_solve(
    patch: *const BcPatch,
    config: *const BcSolverConfig,
    out_patch: *mut *mut BcPatch,
    report: *mut BcSolveReport,
) -> i32 {
    guard(|| {
        let p = &deref(patch, "patch")?.0;
        let config = solver_config(deref(config, "config")?)?;
        let slot = out(out_patch, "out_patch")?;
        let run = newton_run(p, &config, None)?;
        if let Some(r) = report.as_mut() {
            let r2 = &run.report;
            *r = BcSolveReport {
                iterations: r2.iterations as u32,
                residual_sup: r2.residual_sup,
                residual_l2: r2.residual_l2,
                min_cos_alpha: r2.min_cos_trajectory.last().copied().unwrap_or(f64::NAN),
                converged: r2.converged,
            };
        }
        if let Some(e) = run.error {
            return Err(e.into());
        }
        *slot = boxed(run.patch);
        Ok(())
    })
}

/// One diagnostics record at `beta` with mass exponent `q`.
#[no_mangle]
pub unsafe extern "C" fn bc_diagnostics(patch: *const BcPatch, beta: f64, q: f64, out_diag: *mut BcDiagnostics) -> i32 {
    guard(|| {
        let p = &deref(patch, "patch")?.0;
        let slot = out(out_diag, "out_diag")?;
        let r = diagnostics_record(&surface_fields(p), beta, q)?;
        *slot = BcDiagnostics {
            beta: r.beta,
            min_cos_alpha: r.min_cos_alpha,
            lq_mass: r.lq_mass,
            total_a2: r.total_a2,
            total_h2: r.total_h2,
            sup_a: r.sup_a,
            area: r.area,
            l_beta: r.l_beta,
            gauss_res: r.gauss_residual_sup,
            ealpha_res: r.ealpha_residual_sup,
        };
        Ok(())
    })
}

/// Sup and L² norms of the Euler-Lagrange residual over interior nodes.
#[no_mangle]
pub unsafe extern "C" fn bc_residual_norms(patch: *const BcPatch, beta: f64, sup: *mut f64, l2: *mut f64) -> i32 {
    guard(|| {
        let p = &deref(patch, "patch")?.0;
        let (s, l) = (out(sup, "sup")?, out(l2, "l2")?);
        let r = residual_field(&surface_fields(p), beta)?;
        *s = r.sup_norm;
        *l = r.l2_norm;
        Ok(())
    })
}
