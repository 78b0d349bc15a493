//! C ABI over `fluidtail`.
//!
//! Every function returns an [`FtStatus`]; results are written through out
//! pointers. Parameter sets and reports are opaque heap handles that the
//! caller releases with the matching `*_free` function. The message for the
//! most recent failure on the calling thread is available through
//! [`ft_last_error`].
//!
//! ```text
//! FtParams *p; FtReport *rep; double a;
//! ft_params_new(1, 1.0, 3.0, 1.0, &p);
//! ft_analyze(p, 400, &rep);
//! ft_report_alpha_star(rep, &a);      // 0.5
//! ft_report_free(rep); ft_params_free(p);
//! ```

use fluidtail::asymptotics::{self, CaseTag, TailReport};
use fluidtail::model::{self, ModelParams};
use fluidtail::FluidError;
use std::cell::RefCell;
use std::ffi::{c_char, c_int, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

/// Status codes returned by every entry point.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FtStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidParam = 2,
    UnstableChain = 3,
    UnstableFluid = 4,
    AssumptionViolated = 5,
    Numerical = 6,
    BufferTooSmall = 7,
    Panic = 8,
}

/// Opaque model parameters.
pub struct FtParams {
    inner: ModelParams,
}

/// Opaque tail report.
pub struct FtReport {
    inner: TailReport,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn status_of(e: &FluidError) -> FtStatus {
    match e {
        FluidError::InvalidParam(_) => FtStatus::InvalidParam,
        FluidError::UnstableChain { .. } => FtStatus::UnstableChain,
        FluidError::UnstableFluid { .. } => FtStatus::UnstableFluid,
        FluidError::AssumptionViolated(_) | FluidError::MultiplicityTooHigh(_) => FtStatus::AssumptionViolated,
        _ => FtStatus::Numerical,
    }
}

fn guard(f: impl FnOnce() -> Result<(), FtStatus>) -> FtStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => FtStatus::Ok,
        Ok(Err(s)) => s,
        Err(_) => {
            set_error("internal panic".into());
            FtStatus::Panic
        }
    }
}

fn fail(e: FluidError) -> FtStatus {
    let s = status_of(&e);
    set_error(e.to_string());
    s
}

unsafe fn deref<'a, T>(p: *const T) -> Result<&'a T, FtStatus> {
    p.as_ref().ok_or_else(|| {
        set_error("null pointer argument".into());
        FtStatus::NullPointer
    })
}

unsafe fn write<T>(out: *mut T, v: T) -> Result<(), FtStatus> {
    if out.is_null() {
        set_error("null output pointer".into());
        return Err(FtStatus::NullPointer);
    }
    out.write(v);
    Ok(())
}

/// Creates a parameter handle. Fails with `FT_STATUS_INVALID_PARAM` or
/// `FT_STATUS_UNSTABLE_CHAIN` when the values are not admissible.
///
/// # Safety
/// `out` must be a valid pointer to writable storage for one handle pointer.
#[no_mangle]
pub unsafe extern "C" fn ft_params_new(c: u32, lambda: f64, mu: f64, r: f64, out: *mut *mut FtParams) -> FtStatus {
    guard(|| {
        let p = ModelParams::new(c as usize, lambda, mu, r).map_err(fail)?;
        if !p.is_ergodic() {
            return Err(fail(FluidError::UnstableChain { lambda, cmu: p.cmu() }));
        }
        write(out, Box::into_raw(Box::new(FtParams { inner: p })))
    })
}

/// Releases a parameter handle. Null is ignored.
///
/// # Safety
/// `p` must be null or a handle from [`ft_params_new`] that was not freed yet.
#[no_mangle]
pub unsafe extern "C" fn ft_params_free(p: *mut FtParams) {
    if !p.is_null() {
        drop(Box::from_raw(p));
    }
}

/// Writes 1 if the fluid level is stable and 0 otherwise.
///
/// # Safety
/// `p` must be a live handle and `stable` a valid writable pointer.
#[no_mangle]
pub unsafe extern "C" fn ft_is_stable(p: *const FtParams, stable: *mut c_int) -> FtStatus {
    guard(|| {
        let p = deref(p)?;
        let v = model::is_stable(&p.inner).map_err(fail)?;
        write(stable, c_int::from(v.stable))
    })
}

/// Writes the stationary probability of background phase `i`.
///
/// # Safety
/// `p` must be a live handle and `out` a valid writable pointer.
#[no_mangle]
pub unsafe extern "C" fn ft_phase_probability(p: *const FtParams, i: u32, out: *mut f64) -> FtStatus {
    guard(|| {
        let p = deref(p)?;
        let xi = model::phase_stationary(&p.inner).map_err(fail)?;
        write(out, xi.xi(i as usize))
    })
}

/// Runs the full tail analysis, with the boundary vector taken from a
/// spectral solve truncated at `truncation` phases.
///
/// # Safety
/// `p` must be a live handle and `out` a valid pointer to writable storage
/// for one handle pointer.
#[no_mangle]
pub unsafe extern "C" fn ft_analyze(p: *const FtParams, truncation: u32, out: *mut *mut FtReport) -> FtStatus {
    guard(|| {
        let p = deref(p)?;
        let rep = asymptotics::analyze(&p.inner, truncation as usize).map_err(fail)?;
        write(out, Box::into_raw(Box::new(FtReport { inner: rep })))
    })
}

/// Releases a report handle. Null is ignored.
///
/// # Safety
/// `rep` must be null or a handle from [`ft_analyze`] that was not freed yet.
#[no_mangle]
pub unsafe extern "C" fn ft_report_free(rep: *mut FtReport) {
    if !rep.is_null() {
        drop(Box::from_raw(rep));
    }
}

/// Writes the case number: 1, 2 or 3.
///
/// # Safety
/// `rep` must be a live handle and `out` a valid writable pointer.
#[no_mangle]
pub unsafe extern "C" fn ft_report_case(rep: *const FtReport, out: *mut c_int) -> FtStatus {
    guard(|| {
        let rep = deref(rep)?;
        let n = match rep.inner.case_tag {
            CaseTag::I => 1,
            CaseTag::II => 2,
            CaseTag::III => 3,
        };
        write(out, n)
    })
}

unsafe fn get(rep: *const FtReport, out: *mut f64, f: impl FnOnce(&TailReport) -> f64) -> FtStatus {
    guard(|| {
        let rep = deref(rep)?;
        write(out, f(&rep.inner))
    })
}

/// Decay rate of the level density.
///
/// # Safety
/// `rep` must be a live handle and `out` a valid writable pointer.
#[no_mangle]
pub unsafe extern "C" fn ft_report_alpha_star(rep: *const FtReport, out: *mut f64) -> FtStatus {
    get(rep, out, |r| r.alpha_star)
}

/// Left branch point of the kernel discriminant.
///
/// # Safety
/// `rep` must be a live handle and `out` a valid writable pointer.
#[no_mangle]
pub unsafe extern "C" fn ft_report_alpha1(rep: *const FtReport, out: *mut f64) -> FtStatus {
    get(rep, out, |r| r.alpha1)
}

/// Power of `x` in the density asymptotics.
///
/// # Safety
/// `rep` must be a live handle and `out` a valid writable pointer.
#[no_mangle]
pub unsafe extern "C" fn ft_report_power(rep: *const FtReport, out: *mut f64) -> FtStatus {
    get(rep, out, |r| r.power)
}

/// Density prefactor for the top lower phase.
///
/// # Safety
/// `rep` must be a live handle and `out` a valid writable pointer.
#[no_mangle]
pub unsafe extern "C" fn ft_report_prefactor(rep: *const FtReport, out: *mut f64) -> FtStatus {
    get(rep, out, |r| r.big_c)
}

/// Density prefactor for the marginal level.
///
/// # Safety
/// `rep` must be a live handle and `out` a valid writable pointer.
#[no_mangle]
pub unsafe extern "C" fn ft_report_marginal_prefactor(rep: *const FtReport, out: *mut f64) -> FtStatus {
    get(rep, out, |r| r.c_tilde)
}

/// Ratio of consecutive phase prefactors.
///
/// # Safety
/// `rep` must be a live handle and `out` a valid writable pointer.
#[no_mangle]
pub unsafe extern "C" fn ft_report_phase_ratio(rep: *const FtReport, out: *mut f64) -> FtStatus {
    get(rep, out, |r| r.phase_ratio)
}

/// Copies the boundary masses `P(X = 0, Z = i)`, `i < c`, into `buf`.
/// `len` receives the number of entries; with a short buffer nothing is
/// copied and `FT_STATUS_BUFFER_TOO_SMALL` is returned.
///
/// # Safety
/// `rep` must be a live handle, `len` a valid writable pointer and `buf`
/// valid for `cap` writes (or null when `cap` is 0).
#[no_mangle]
pub unsafe extern "C" fn ft_report_boundary(rep: *const FtReport, buf: *mut f64, cap: usize, len: *mut usize) -> FtStatus {
    guard(|| {
        let rep = deref(rep)?;
        let v = &rep.inner.boundary.pi0;
        write(len, v.len())?;
        if cap < v.len() {
            set_error(format!("buffer holds {cap}, need {}", v.len()));
            return Err(FtStatus::BufferTooSmall);
        }
        if buf.is_null() && !v.is_empty() {
            return Err(FtStatus::NullPointer);
        }
        ptr::copy_nonoverlapping(v.as_ptr(), buf, v.len());
        Ok(())
    })
}

/// Returns the message of the last failure on this thread, or null. The
/// pointer stays valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn ft_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn ft_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}
