//! C ABI over `monoplane`.
//!
//! Every function returns an [`MpStatus`]; outputs go through pointers. Objects are opaque
//! handles released with their `_free` function. The message of the last failure on the
//! calling thread is available from [`mp_last_error_message`].

#![allow(clippy::missing_safety_doc)]

use monoplane::beltrami::counterexample::{audit_bundle, shared_counterexample};
use monoplane::beltrami::{beltrami_quotient, minty_backward, minty_forward, LipschitzMap, LipschitzSpec, Provenance};
use monoplane::duality::{dual_field, invert_field, InvertOptions};
use monoplane::field::monotonicity_gap;
use monoplane::solver::{build_disc_mesh, GridFunction, SolveOptions, SolveReport, SolverContext};
use monoplane::{Error, FieldSpec, MonotoneField, PlaneVec};
use std::cell::RefCell;
use std::ffi::{c_char, CStr};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::sync::Arc;

/// Result code of every exported function.
#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum MpStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidParameter = 2,
    Parse = 3,
    NonConvergence = 4,
    LipschitzViolation = 5,
    SolveFailed = 6,
    CoveringFailure = 7,
    AuditFailed = 8,
    Config = 9,
    Io = 10,
    Utf8 = 11,
    Panic = 12,
}

/// A monotone vector field.
pub struct MpField(MonotoneField);

/// A 1-Lipschitz Beltrami datum `H`.
pub struct MpBeltrami(LipschitzMap);

/// A discrete Dirichlet solution on the unit disc.
pub struct MpSolution {
    u: GridFunction,
    report: SolveReport,
}

thread_local! {
    static LAST_ERROR: RefCell<String> = const { RefCell::new(String::new()) };
}

fn set_error(msg: impl Into<String>) {
    LAST_ERROR.with(|e| *e.borrow_mut() = msg.into());
}

fn status_of(err: &Error) -> MpStatus {
    match err {
        Error::InvalidParameter(_) => MpStatus::InvalidParameter,
        Error::NonConvergence { .. } => MpStatus::NonConvergence,
        Error::LipschitzViolation { .. } => MpStatus::LipschitzViolation,
        Error::SolveFailed { .. } => MpStatus::SolveFailed,
        Error::CoveringFailure { .. } => MpStatus::CoveringFailure,
        Error::AuditFailed(_) => MpStatus::AuditFailed,
        Error::Parse(_) => MpStatus::Parse,
        Error::Config(_) => MpStatus::Config,
        Error::Io(_) => MpStatus::Io,
    }
}

/// Runs `f`, converting errors and panics into a status and the thread's last error.
fn guard(f: impl FnOnce() -> Result<(), (MpStatus, String)>) -> MpStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            set_error("");
            MpStatus::Ok
        }
        Ok(Err((status, msg))) => {
            set_error(msg);
            status
        }
        Err(panic) => {
            let msg = panic
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| panic.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "panic".into());
            set_error(format!("panic: {msg}"));
            MpStatus::Panic
        }
    }
}

type Fallible<T> = Result<T, (MpStatus, String)>;

fn lift<T>(r: monoplane::Result<T>) -> Fallible<T> {
    r.map_err(|e| (status_of(&e), e.to_string()))
}

fn null(name: &str) -> (MpStatus, String) {
    (MpStatus::NullPointer, format!("{name} is null"))
}

unsafe fn as_ref<'a, T>(p: *const T, name: &str) -> Fallible<&'a T> {
    p.as_ref().ok_or_else(|| null(name))
}

unsafe fn out<'a, T>(p: *mut T, name: &str) -> Fallible<&'a mut T> {
    p.as_mut().ok_or_else(|| null(name))
}

unsafe fn text<'a>(p: *const c_char, name: &str) -> Fallible<&'a str> {
    if p.is_null() {
        return Err(null(name));
    }
    CStr::from_ptr(p).to_str().map_err(|e| (MpStatus::Utf8, format!("{name}: {e}")))
}

unsafe fn slice<'a>(p: *const f64, len: usize, name: &str) -> Fallible<&'a [f64]> {
    if len == 0 {
        Ok(&[])
    } else if p.is_null() {
        Err(null(name))
    } else {
        Ok(std::slice::from_raw_parts(p, len))
    }
}

/// Copies `s` with a terminating NUL into `buf` when it fits; returns the bytes needed.
unsafe fn copy_str(s: &str, buf: *mut c_char, len: usize) -> usize {
    let needed = s.len() + 1;
    if !buf.is_null() && len >= needed {
        std::ptr::copy_nonoverlapping(s.as_ptr(), buf as *mut u8, s.len());
        *buf.add(s.len()) = 0;
    }
    needed
}

/// Copies the last error message of this thread into `buf` (NUL-terminated) if `len` is large
/// enough, and returns the buffer size needed. Pass a null `buf` to query the size.
#[no_mangle]
pub unsafe extern "C" fn mp_last_error_message(buf: *mut c_char, len: usize) -> usize {
    LAST_ERROR.with(|e| copy_str(&e.borrow(), buf, len))
}

/// Parses a field spec such as `"p_laplacian(p=4)"` or `"mollify(g0_cubic, eps=0.1)"`.
#[no_mangle]
pub unsafe extern "C" fn mp_field_new(spec: *const c_char, field: *mut *mut MpField) -> MpStatus {
    guard(|| {
        let spec: FieldSpec = lift(text(spec, "spec")?.parse())?;
        let f = lift(MonotoneField::from_spec(&spec))?;
        *out(field, "field")? = Box::into_raw(Box::new(MpField(f)));
        Ok(())
    })
}

#[no_mangle]
pub unsafe extern "C" fn mp_field_free(field: *mut MpField) {
    if !field.is_null() {
        drop(Box::from_raw(field));
    }
}

/// Writes the canonical spec text; `needed` receives the buffer size including the NUL.
#[no_mangle]
pub unsafe extern "C" fn mp_field_label(field: *const MpField, buf: *mut c_char, len: usize, needed: *mut usize) -> MpStatus {
    guard(|| {
        let f = as_ref(field, "field")?;
        let n = copy_str(&f.0.label(), buf, len);
        *out(needed, "needed")? = n;
        Ok(())
    })
}

#[no_mangle]
pub unsafe extern "C" fn mp_field_eval(field: *const MpField, x: f64, y: f64, gx: *mut f64, gy: *mut f64) -> MpStatus {
    guard(|| {
        let v = as_ref(field, "field")?.0.eval(PlaneVec::new(x, y));
        *out(gx, "gx")? = v.x;
        *out(gy, "gy")? = v.y;
        Ok(())
    })
}

/// Row-major Jacobian `[a, b, c, d]` into `jac[4]`.
#[no_mangle]
pub unsafe extern "C" fn mp_field_jacobian(field: *const MpField, x: f64, y: f64, jac: *mut f64) -> MpStatus {
    guard(|| {
        let m = as_ref(field, "field")?.0.jacobian(PlaneVec::new(x, y));
        if jac.is_null() {
            return Err(null("jac"));
        }
        std::slice::from_raw_parts_mut(jac, 4).copy_from_slice(&[m.a, m.b, m.c, m.d]);
        Ok(())
    })
}

/// `<G(a) - G(b), a - b>`.
#[no_mangle]
pub unsafe extern "C" fn mp_field_gap(field: *const MpField, ax: f64, ay: f64, bx: f64, by: f64, gap: *mut f64) -> MpStatus {
    guard(|| {
        let f = as_ref(field, "field")?;
        *out(gap, "gap")? = monotonicity_gap(&f.0, PlaneVec::new(ax, ay), PlaneVec::new(bx, by));
        Ok(())
    })
}

/// Solves `G(x) = target` to absolute tolerance `tol`.
#[no_mangle]
pub unsafe extern "C" fn mp_field_invert(field: *const MpField, tx: f64, ty: f64, tol: f64, x: *mut f64, y: *mut f64) -> MpStatus {
    guard(|| {
        let f = as_ref(field, "field")?;
        let r = lift(invert_field(&f.0, PlaneVec::new(tx, ty), &InvertOptions::with_tol(tol)))?;
        *out(x, "x")? = r.preimage.x;
        *out(y, "y")? = r.preimage.y;
        Ok(())
    })
}

/// The dual field `G*(x) = i G^{-1}(-i x)` as a new handle.
#[no_mangle]
pub unsafe extern "C" fn mp_field_dual(field: *const MpField, dual: *mut *mut MpField) -> MpStatus {
    guard(|| {
        let d = lift(dual_field(&as_ref(field, "field")?.0))?;
        *out(dual, "dual")? = Box::into_raw(Box::new(MpField(d)));
        Ok(())
    })
}

/// Parses a Beltrami datum: `"zero"`, `"affine(a_re, a_im, b_re, b_im)"`, `"explicit_s6"` or
/// `"minty(<field spec>)"`.
#[no_mangle]
pub unsafe extern "C" fn mp_beltrami_new(spec: *const c_char, h: *mut *mut MpBeltrami) -> MpStatus {
    guard(|| {
        let spec: LipschitzSpec = lift(text(spec, "spec")?.parse())?;
        let map = lift(spec.build())?;
        *out(h, "h")? = Box::into_raw(Box::new(MpBeltrami(map)));
        Ok(())
    })
}

#[no_mangle]
pub unsafe extern "C" fn mp_beltrami_free(h: *mut MpBeltrami) {
    if !h.is_null() {
        drop(Box::from_raw(h));
    }
}

#[no_mangle]
pub unsafe extern "C" fn mp_beltrami_eval(h: *const MpBeltrami, x: f64, y: f64, hx: *mut f64, hy: *mut f64) -> MpStatus {
    guard(|| {
        let v = as_ref(h, "h")?.0.eval(PlaneVec::new(x, y));
        *out(hx, "hx")? = v.x;
        *out(hy, "hy")? = v.y;
        Ok(())
    })
}

/// Difference quotient `L` of `H` at `base` along `offset`, with both Γ± values.
#[no_mangle]
pub unsafe extern "C" fn mp_beltrami_quotient(
    h: *const MpBeltrami,
    base_x: f64,
    base_y: f64,
    offset_x: f64,
    offset_y: f64,
    l_re: *mut f64,
    l_im: *mut f64,
    gamma_plus: *mut f64,
    gamma_minus: *mut f64,
) -> MpStatus {
    guard(|| {
        let q = lift(beltrami_quotient(&as_ref(h, "h")?.0, PlaneVec::new(base_x, base_y), PlaneVec::new(offset_x, offset_y)))?;
        *out(l_re, "l_re")? = q.l.re;
        *out(l_im, "l_im")? = q.l.im;
        *out(gamma_plus, "gamma_plus")? = q.gamma_plus;
        *out(gamma_minus, "gamma_minus")? = q.gamma_minus;
        Ok(())
    })
}

/// Beltrami datum `H` of a monotone field.
#[no_mangle]
pub unsafe extern "C" fn mp_minty_forward(field: *const MpField, h: *mut *mut MpBeltrami) -> MpStatus {
    guard(|| {
        let fw = lift(minty_forward(&as_ref(field, "field")?.0))?;
        *out(h, "h")? = Box::into_raw(Box::new(MpBeltrami(fw.h)));
        Ok(())
    })
}

/// Monotone field recovered from a Beltrami datum.
#[no_mangle]
pub unsafe extern "C" fn mp_minty_backward(h: *const MpBeltrami, field: *mut *mut MpField) -> MpStatus {
    guard(|| {
        let map = &as_ref(h, "h")?.0;
        let spec = match map.provenance() {
            Provenance::MintyForward(s) => s.clone(),
            Provenance::ExplicitS6 => FieldSpec::CounterexampleS6,
            Provenance::Catalog(_) => FieldSpec::Identity,
        };
        let back = lift(minty_backward(map, spec))?;
        *out(field, "field")? = Box::into_raw(Box::new(MpField(back.g)));
        Ok(())
    })
}

/// Runs every check of the explicit counterexample; `pass` receives the overall verdict and
/// `rows` the number of checks.
#[no_mangle]
pub unsafe extern "C" fn mp_counterexample_audit(pass: *mut bool, rows: *mut usize) -> MpStatus {
    guard(|| {
        let audit = lift(shared_counterexample().and_then(audit_bundle))?;
        *out(pass, "pass")? = audit.pass;
        *out(rows, "rows")? = audit.rows.len();
        Ok(())
    })
}

/// The exact counterexample solution `u` at `(x, y)`.
#[no_mangle]
pub unsafe extern "C" fn mp_counterexample_u(x: f64, y: f64, u: *mut f64) -> MpStatus {
    guard(|| {
        let b = lift(shared_counterexample())?;
        *out(u, "u")? = b.u(PlaneVec::new(x, y));
        Ok(())
    })
}

/// Solves `div G(grad u) = 0` on the unit disc with mesh size `h` and boundary data
/// `c + sum_k cos_k cos(k t) + sin_k sin(k t)`, `k` starting at 1.
#[no_mangle]
pub unsafe extern "C" fn mp_solve(
    field: *const MpField,
    h: f64,
    constant: f64,
    cos_coeffs: *const f64,
    n_cos: usize,
    sin_coeffs: *const f64,
    n_sin: usize,
    tol: f64,
    solution: *mut *mut MpSolution,
) -> MpStatus {
    guard(|| {
        let f = as_ref(field, "field")?;
        let (cs, ss) = (slice(cos_coeffs, n_cos, "cos_coeffs")?.to_vec(), slice(sin_coeffs, n_sin, "sin_coeffs")?.to_vec());
        let slot = out(solution, "solution")?;
        let boundary = move |t: f64| {
            let c: f64 = cs.iter().enumerate().map(|(k, a)| a * ((k + 1) as f64 * t).cos()).sum();
            let s: f64 = ss.iter().enumerate().map(|(k, b)| b * ((k + 1) as f64 * t).sin()).sum();
            constant + c + s
        };
        let domain = Arc::new(lift(build_disc_mesh(h))?);
        let ctx = lift(SolverContext::new(domain))?;
        let (u, report) = lift(ctx.solve(&f.0, &boundary, &SolveOptions::with_tol(tol)))?;
        *slot = Box::into_raw(Box::new(MpSolution { u, report }));
        Ok(())
    })
}

#[no_mangle]
pub unsafe extern "C" fn mp_solution_free(solution: *mut MpSolution) {
    if !solution.is_null() {
        drop(Box::from_raw(solution));
    }
}

#[no_mangle]
pub unsafe extern "C" fn mp_solution_node_count(solution: *const MpSolution, count: *mut usize) -> MpStatus {
    guard(|| {
        *out(count, "count")? = as_ref(solution, "solution")?.u.values.len();
        Ok(())
    })
}

/// Copies node coordinates (`xy[2n]`, interleaved) and nodal values (`values[n]`); either
/// output may be null. `len` is the node capacity of the buffers.
#[no_mangle]
pub unsafe extern "C" fn mp_solution_nodes(solution: *const MpSolution, xy: *mut f64, values: *mut f64, len: usize) -> MpStatus {
    guard(|| {
        let s = as_ref(solution, "solution")?;
        let n = s.u.values.len();
        if len < n {
            return Err((MpStatus::InvalidParameter, format!("buffer holds {len} nodes, {n} needed")));
        }
        if !xy.is_null() {
            let buf = std::slice::from_raw_parts_mut(xy, 2 * n);
            for (k, p) in s.u.domain.nodes.iter().enumerate() {
                buf[2 * k] = p.x;
                buf[2 * k + 1] = p.y;
            }
        }
        if !values.is_null() {
            std::slice::from_raw_parts_mut(values, n).copy_from_slice(&s.u.values);
        }
        Ok(())
    })
}

/// Final residual `max_i |R_i|`, Newton-type iterations, and `max |grad u|` over triangles.
#[no_mangle]
pub unsafe extern "C" fn mp_solution_report(solution: *const MpSolution, residual: *mut f64, iterations: *mut usize, lipschitz: *mut f64) -> MpStatus {
    guard(|| {
        let r = &as_ref(solution, "solution")?.report;
        *out(residual, "residual")? = r.residual_norm;
        *out(iterations, "iterations")? = r.iterations;
        *out(lipschitz, "lipschitz")? = r.lipschitz_estimate;
        Ok(())
    })
}
