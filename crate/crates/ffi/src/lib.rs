//! C ABI over `fraclap`.
//!
//! Objects are opaque heap handles created by `fl_*_new` and released by the
//! matching `fl_*_free`. Every fallible call returns an [`FlStatus`]; on
//! failure the message is available from [`fl_last_error`] until the next
//! call on the same thread. Panics never cross the boundary.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::slice;
use std::sync::Arc;

use fraclap::kernel::{build_constants, DEFAULT_LATTICE_TOL, DEFAULT_RADIUS_POINTS};
use fraclap::precond::{Backend, PoissonPreconditioner};
use fraclap::timestepper::cn_step;
use fraclap::{Error, Field, FracLapOperator, Grid, LinearOperator, PcgOptions};

/// Result codes.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FlStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    Dimension = 3,
    NotConverged = 4,
    Breakdown = 5,
    Factorization = 6,
    Internal = 7,
    Panic = 8,
}

/// Grid handle.
pub struct FlGrid(Arc<Grid>);

/// Operator handle. Owns its grid.
pub struct FlOperator(FracLapOperator);

/// Preconditioner handle.
pub struct FlPreconditioner(PoissonPreconditioner);

/// Operator constants for one `(α, d, h)` triple.
#[repr(C)]
#[derive(Debug, Clone, Copy, Default)]
pub struct FlConstants {
    pub alpha: f64,
    pub d: u32,
    pub h: f64,
    pub delta: f64,
    pub c: f64,
    pub a1: f64,
    pub a2: f64,
    pub a3: f64,
}

/// Outcome of a linear solve.
#[repr(C)]
#[derive(Debug, Clone, Copy, Default)]
pub struct FlSolveInfo {
    pub iterations: u64,
    pub converged: bool,
    pub relative_residual: f64,
    pub wall_time: f64,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).expect("nul bytes removed");
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn status_of(err: &Error) -> FlStatus {
    match err {
        Error::Config(_) | Error::Domain(_) | Error::Divergence { .. } | Error::Parse(_) => {
            FlStatus::InvalidArgument
        }
        Error::Dimension(_) | Error::Size { .. } => FlStatus::Dimension,
        Error::StepFailed { .. } => FlStatus::NotConverged,
        Error::Breakdown { .. } => FlStatus::Breakdown,
        Error::Factorization(_) => FlStatus::Factorization,
        _ => FlStatus::Internal,
    }
}

/// Runs `f`, converting errors and panics into status codes.
fn guard(f: impl FnOnce() -> Result<(), (FlStatus, String)>) -> FlStatus {
    LAST_ERROR.with(|e| *e.borrow_mut() = None);
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => FlStatus::Ok,
        Ok(Err((status, msg))) => {
            set_error(msg);
            status
        }
        Err(payload) => {
            let msg = payload
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| payload.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "panic".into());
            set_error(format!("panic: {msg}"));
            FlStatus::Panic
        }
    }
}

fn lift(err: Error) -> (FlStatus, String) {
    (status_of(&err), err.to_string())
}

fn null(what: &str) -> (FlStatus, String) {
    (FlStatus::NullPointer, format!("{what} is null"))
}

unsafe fn deref<'a, T>(p: *const T, what: &str) -> Result<&'a T, (FlStatus, String)> {
    p.as_ref().ok_or_else(|| null(what))
}

unsafe fn input<'a>(p: *const f64, n: usize, what: &str) -> Result<&'a [f64], (FlStatus, String)> {
    if p.is_null() {
        return Err(null(what));
    }
    Ok(slice::from_raw_parts(p, n))
}

unsafe fn output<'a>(p: *mut f64, n: usize, what: &str) -> Result<&'a mut [f64], (FlStatus, String)> {
    if p.is_null() {
        return Err(null(what));
    }
    Ok(slice::from_raw_parts_mut(p, n))
}

unsafe fn store<T>(out: *mut *mut T, value: T) -> Result<(), (FlStatus, String)> {
    if out.is_null() {
        return Err(null("output handle"));
    }
    *out = Box::into_raw(Box::new(value));
    Ok(())
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn fl_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Message for the last failed call on this thread, or null. The pointer is
/// valid until the next `fl_*` call on the same thread.
#[no_mangle]
pub extern "C" fn fl_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(std::ptr::null(), |c| c.as_ptr()))
}

/// Full grid with `m` interior points per axis on the box given by `lo[k]`,
/// `hi[k]` for `k < d`.
///
/// # Safety
/// `lo` and `hi` point to `d` doubles; `out` is writable.
#[no_mangle]
pub unsafe extern "C" fn fl_grid_new(
    d: u32,
    m: u64,
    lo: *const f64,
    hi: *const f64,
    out: *mut *mut FlGrid,
) -> FlStatus {
    guard(|| {
        let lo = input(lo, d as usize, "lo")?;
        let hi = input(hi, d as usize, "hi")?;
        let bounds: Vec<(f64, f64)> = lo.iter().copied().zip(hi.iter().copied()).collect();
        let g = Grid::new(d as usize, m as usize, &bounds).map_err(lift)?;
        store(out, FlGrid(Arc::new(g)))
    })
}

/// L-shaped grid on `[0, 1]^2`.
///
/// # Safety
/// `out` is writable.
#[no_mangle]
pub unsafe extern "C" fn fl_grid_l_shape(m: u64, out: *mut *mut FlGrid) -> FlStatus {
    guard(|| {
        let g = Grid::l_shape(m as usize).map_err(lift)?;
        store(out, FlGrid(Arc::new(g)))
    })
}

/// # Safety
/// `grid` is null or came from `fl_grid_*` and is not used afterwards.
#[no_mangle]
pub unsafe extern "C" fn fl_grid_free(grid: *mut FlGrid) {
    if !grid.is_null() {
        drop(Box::from_raw(grid));
    }
}

/// Number of unknowns, or 0 for a null grid.
///
/// # Safety
/// `grid` is null or valid.
#[no_mangle]
pub unsafe extern "C" fn fl_grid_n_active(grid: *const FlGrid) -> u64 {
    grid.as_ref().map_or(0, |g| g.0.n_active() as u64)
}

/// Grid spacing, or NaN for a null grid.
///
/// # Safety
/// `grid` is null or valid.
#[no_mangle]
pub unsafe extern "C" fn fl_grid_spacing(grid: *const FlGrid) -> f64 {
    grid.as_ref().map_or(f64::NAN, |g| g.0.h())
}

/// Constants for order `alpha` on `grid`.
///
/// # Safety
/// `grid` is valid; `out` is writable.
#[no_mangle]
pub unsafe extern "C" fn fl_constants(grid: *const FlGrid, alpha: f64, out: *mut FlConstants) -> FlStatus {
    guard(|| {
        let g = &deref(grid, "grid")?.0;
        let c = build_constants(alpha, g.dim(), g.h(), DEFAULT_RADIUS_POINTS, DEFAULT_LATTICE_TOL)
            .map_err(lift)?;
        let out = out.as_mut().ok_or_else(|| null("out"))?;
        *out = FlConstants {
            alpha,
            d: g.dim() as u32,
            h: g.h(),
            delta: c.window.delta,
            c: c.c_ad,
            a1: c.a1,
            a2: c.a2,
            a3: c.a3,
        };
        Ok(())
    })
}

/// Builds the discrete operator of order `alpha` on `grid`. The grid handle
/// stays owned by the caller.
///
/// # Safety
/// `grid` is valid; `out` is writable.
#[no_mangle]
pub unsafe extern "C" fn fl_operator_new(
    grid: *const FlGrid,
    alpha: f64,
    out: *mut *mut FlOperator,
) -> FlStatus {
    guard(|| {
        let g = deref(grid, "grid")?.0.clone();
        let c = build_constants(alpha, g.dim(), g.h(), DEFAULT_RADIUS_POINTS, DEFAULT_LATTICE_TOL)
            .map_err(lift)?;
        let op = FracLapOperator::new(g, c).map_err(lift)?;
        store(out, FlOperator(op))
    })
}

/// # Safety
/// `op` is null or came from `fl_operator_new` and is not used afterwards.
#[no_mangle]
pub unsafe extern "C" fn fl_operator_free(op: *mut FlOperator) {
    if !op.is_null() {
        drop(Box::from_raw(op));
    }
}

/// `y = M x`, both of length `n`, which must equal the grid's unknown count.
///
/// # Safety
/// `x` and `y` point to `n` doubles and do not overlap.
#[no_mangle]
pub unsafe extern "C" fn fl_operator_apply(
    op: *const FlOperator,
    x: *const f64,
    y: *mut f64,
    n: u64,
) -> FlStatus {
    guard(|| {
        let op = &deref(op, "operator")?.0;
        check_len(op.len(), n)?;
        let x = input(x, n as usize, "x")?;
        let y = output(y, n as usize, "y")?;
        op.apply_slice(x, y);
        Ok(())
    })
}

fn check_len(expected: usize, n: u64) -> Result<(), (FlStatus, String)> {
    if expected as u64 != n {
        return Err((
            FlStatus::Dimension,
            format!("buffer length {n} does not match {expected} unknowns"),
        ));
    }
    Ok(())
}

/// Preconditioner `γ(-Δ_h)` for the elliptic system of `op`.
///
/// # Safety
/// `op` is valid; `out` is writable.
#[no_mangle]
pub unsafe extern "C" fn fl_precond_new_elliptic(
    op: *const FlOperator,
    out: *mut *mut FlPreconditioner,
) -> FlStatus {
    guard(|| {
        let op = &deref(op, "operator")?.0;
        let pc = PoissonPreconditioner::elliptic(op.grid().clone(), op.constants()).map_err(lift)?;
        store(out, FlPreconditioner(pc))
    })
}

/// Preconditioner `I + (dt/2) γ(-Δ_h)` for Crank–Nicolson steps with `op`.
///
/// # Safety
/// `op` is valid; `out` is writable.
#[no_mangle]
pub unsafe extern "C" fn fl_precond_new_time_step(
    op: *const FlOperator,
    dt: f64,
    out: *mut *mut FlPreconditioner,
) -> FlStatus {
    guard(|| {
        let op = &deref(op, "operator")?.0;
        let pc = PoissonPreconditioner::time_step(op.grid().clone(), op.constants(), dt).map_err(lift)?;
        store(out, FlPreconditioner(pc))
    })
}

/// Preconditioner `σI + γ(-Δ_h)` with explicit coefficients.
/// `backend`: 0 automatic, 1 sine transform, 2 sparse Cholesky.
///
/// # Safety
/// `grid` is valid; `out` is writable.
#[no_mangle]
pub unsafe extern "C" fn fl_precond_new(
    grid: *const FlGrid,
    sigma: f64,
    gamma: f64,
    backend: u32,
    out: *mut *mut FlPreconditioner,
) -> FlStatus {
    guard(|| {
        let g = deref(grid, "grid")?.0.clone();
        let backend = match backend {
            0 => Backend::Auto,
            1 => Backend::Spectral,
            2 => Backend::Factorized,
            b => return Err((FlStatus::InvalidArgument, format!("unknown backend {b}"))),
        };
        let pc = PoissonPreconditioner::new(g, sigma, gamma, backend).map_err(lift)?;
        store(out, FlPreconditioner(pc))
    })
}

/// # Safety
/// `pc` is null or came from `fl_precond_new*` and is not used afterwards.
#[no_mangle]
pub unsafe extern "C" fn fl_precond_free(pc: *mut FlPreconditioner) {
    if !pc.is_null() {
        drop(Box::from_raw(pc));
    }
}

/// `z = P⁻¹ r`.
///
/// # Safety
/// `r` and `z` point to `n` doubles and do not overlap.
#[no_mangle]
pub unsafe extern "C" fn fl_precond_apply(
    pc: *const FlPreconditioner,
    r: *const f64,
    z: *mut f64,
    n: u64,
) -> FlStatus {
    guard(|| {
        let pc = &deref(pc, "preconditioner")?.0;
        check_len(pc.len(), n)?;
        let r = input(r, n as usize, "r")?;
        let z = output(z, n as usize, "z")?;
        pc.solve_slice(r, z);
        Ok(())
    })
}

fn options(d: usize, tol: f64, max_iterations: u64) -> PcgOptions {
    if max_iterations == 0 {
        PcgOptions::for_dim(d, tol)
    } else {
        PcgOptions::new(tol, max_iterations as usize)
    }
}

fn fill_info(info: *mut FlSolveInfo, report: &fraclap::SolveReport) {
    if let Some(info) = unsafe { info.as_mut() } {
        *info = FlSolveInfo {
            iterations: report.iterations as u64,
            converged: report.converged,
            relative_residual: report.relative_residual,
            wall_time: report.wall_time,
        };
    }
}

/// Solves `M x = b` by PCG. `pc` may be null for plain CG. On entry `x`
/// holds the initial guess. `max_iterations = 0` picks the default cap.
/// Returns `NotConverged` (with `x` and `info` filled) when the cap is hit.
///
/// # Safety
/// `b` and `x` point to `n` doubles; `info` is null or writable.
#[no_mangle]
pub unsafe extern "C" fn fl_solve(
    op: *const FlOperator,
    pc: *const FlPreconditioner,
    b: *const f64,
    x: *mut f64,
    n: u64,
    tol: f64,
    max_iterations: u64,
    info: *mut FlSolveInfo,
) -> FlStatus {
    guard(|| {
        let op = &deref(op, "operator")?.0;
        check_len(op.len(), n)?;
        let pc = pc.as_ref().map(|p| &p.0 as &dyn LinearOperator);
        let b = input(b, n as usize, "b")?;
        let x = output(x, n as usize, "x")?;
        let opts = options(op.grid().dim(), tol, max_iterations);
        let (sol, report) = fraclap::pcg(op, pc, b, Some(x), &opts).map_err(lift)?;
        x.copy_from_slice(&sol);
        fill_info(info, &report);
        if !report.converged {
            return Err((
                FlStatus::NotConverged,
                format!(
                    "PCG stopped after {} iterations at relative residual {:e}",
                    report.iterations, report.relative_residual
                ),
            ));
        }
        Ok(())
    })
}

/// One Crank–Nicolson step `u ← u_{k+1}` with sources `f_k`, `f_{k+1}`
/// (either may be null for zero). `pc` may be null.
///
/// # Safety
/// `u` points to `n` doubles; `f_k` and `f_k1` are null or point to `n`
/// doubles; `info` is null or writable.
#[no_mangle]
pub unsafe extern "C" fn fl_cn_step(
    op: *const FlOperator,
    pc: *const FlPreconditioner,
    u: *mut f64,
    f_k: *const f64,
    f_k1: *const f64,
    n: u64,
    dt: f64,
    tol: f64,
    info: *mut FlSolveInfo,
) -> FlStatus {
    guard(|| {
        let op = &deref(op, "operator")?.0;
        check_len(op.len(), n)?;
        let g = op.grid().clone();
        let pc = pc.as_ref().map(|p| &p.0);
        let u = output(u, n as usize, "u")?;
        let source = |p: *const f64| -> Result<Field, (FlStatus, String)> {
            if p.is_null() {
                Ok(Field::zeros(g.clone()))
            } else {
                Field::new(g.clone(), slice::from_raw_parts(p, n as usize).to_vec()).map_err(lift)
            }
        };
        let (fk, fk1) = (source(f_k)?, source(f_k1)?);
        let uk = Field::new(g.clone(), u.to_vec()).map_err(lift)?;
        let opts = PcgOptions::for_dim(g.dim(), tol);
        match cn_step(op, pc, &uk, &fk, &fk1, dt, &opts) {
            Ok((next, report)) => {
                u.copy_from_slice(next.values());
                fill_info(info, &report);
                Ok(())
            }
            Err(err) => {
                if let Error::StepFailed { report, .. } = &err {
                    fill_info(info, report);
                }
                Err(lift(err))
            }
        }
    })
}

/// Copies the last error into `buf` (NUL-terminated, truncated to `len`).
/// Returns the full message length, or 0 when there is none.
///
/// # Safety
/// `buf` is null or points to `len` writable bytes.
#[no_mangle]
pub unsafe extern "C" fn fl_last_error_copy(buf: *mut c_char, len: u64) -> u64 {
    LAST_ERROR.with(|e| {
        let e = e.borrow();
        let Some(msg) = e.as_ref() else { return 0 };
        let bytes = CStr::to_bytes(msg);
        if !buf.is_null() && len > 0 {
            let k = bytes.len().min(len as usize - 1);
            std::ptr::copy_nonoverlapping(bytes.as_ptr().cast(), buf, k);
            *buf.add(k) = 0;
        }
        bytes.len() as u64
    })
}
