//! C ABI for the flame-front laboratory.
//!
//! Every function returns an [`FlStatus`]; on failure a message is kept per
//! thread and can be read with [`fl_last_error_message`]. Handles are opaque
//! and owned by the caller, who releases them with the matching `*_free`.
//! Array outputs take a buffer and its length and always report the length
//! they need through `out_len`, so a first call with `len = 0` sizes the
//! buffer.

use std::cell::RefCell;
use std::ffi::{c_char, CStr};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use flamelab::phase_plane::{orbit_period, steady_count, steady_solution, RsSteadyState, Sign};
use flamelab::poles::{self, Classification, PoleSet};
use flamelab::spectral::GridSpec;
use flamelab::stability::{comparison_test, Verdict};
use flamelab::Error;

/// Result code of every call.
#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum FlStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    NumericalFailure = 3,
    Panic = 4,
    BufferTooSmall = 5,
}

thread_local! {
    static LAST_ERROR: RefCell<String> = const { RefCell::new(String::new()) };
}

fn set_error(msg: impl Into<String>) {
    LAST_ERROR.with(|e| *e.borrow_mut() = msg.into());
}

fn fail(status: FlStatus, msg: impl Into<String>) -> FlStatus {
    set_error(msg);
    status
}

fn from_error(e: Error) -> FlStatus {
    let status = if e.is_input_error() {
        FlStatus::InvalidArgument
    } else {
        FlStatus::NumericalFailure
    };
    fail(status, e.to_string())
}

/// Runs `f`, turning panics into [`FlStatus::Panic`].
fn guard(f: impl FnOnce() -> FlStatus) -> FlStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(s) => {
            if s == FlStatus::Ok {
                set_error("");
            }
            s
        }
        Err(p) => {
            let msg = p
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| p.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "unknown panic".into());
            fail(FlStatus::Panic, format!("panic: {msg}"))
        }
    }
}

macro_rules! non_null {
    ($($p:ident),+) => {
        $(if $p.is_null() {
            return fail(FlStatus::NullPointer, concat!("null pointer: ", stringify!($p)));
        })+
    };
}

/// Copies `src` into `(dst, len)` and reports the needed length.
///
/// # Safety
/// `dst` must be valid for `len` writes when `len >= src.len()`.
unsafe fn copy_out(src: &[f64], dst: *mut f64, len: usize, out_len: *mut usize) -> FlStatus {
    if out_len.is_null() {
        return fail(FlStatus::NullPointer, "null pointer: out_len");
    }
    *out_len = src.len();
    if len < src.len() {
        return fail(
            FlStatus::BufferTooSmall,
            format!("buffer holds {len} values, {} needed", src.len()),
        );
    }
    if dst.is_null() {
        return fail(FlStatus::NullPointer, "null pointer: buffer");
    }
    ptr::copy_nonoverlapping(src.as_ptr(), dst, src.len());
    FlStatus::Ok
}

fn sign_from(sign: i32) -> Result<Sign, FlStatus> {
    match sign {
        1 => Ok(Sign::Plus),
        -1 => Ok(Sign::Minus),
        other => Err(fail(FlStatus::InvalidArgument, format!("sign must be +1 or -1, got {other}"))),
    }
}

/// Copies the last error message of this thread, NUL terminated, into `buf`.
/// `out_len` receives the message length without the terminator.
///
/// # Safety
/// `buf` must be valid for `len` bytes; `out_len` must be valid.
#[no_mangle]
pub unsafe extern "C" fn fl_last_error_message(buf: *mut c_char, len: usize, out_len: *mut usize) -> FlStatus {
    non_null!(out_len);
    let msg = LAST_ERROR.with(|e| e.borrow().clone());
    *out_len = msg.len();
    if len < msg.len() + 1 {
        return FlStatus::BufferTooSmall;
    }
    non_null!(buf);
    ptr::copy_nonoverlapping(msg.as_ptr(), buf.cast::<u8>(), msg.len());
    *buf.add(msg.len()) = 0;
    FlStatus::Ok
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn fl_version() -> *const c_char {
    static VERSION: &CStr = match CStr::from_bytes_with_nul(concat!(env!("CARGO_PKG_VERSION"), "\0").as_bytes()) {
        Ok(s) => s,
        Err(_) => panic!("version string"),
    };
    VERSION.as_ptr()
}

/// Number of nontrivial RS steady states at `epsilon`.
#[no_mangle]
pub extern "C" fn fl_rs_steady_count(epsilon: f64) -> u32 {
    steady_count(epsilon) as u32
}

/// Period of the phase-plane orbit through `(w0, 0)`.
///
/// # Safety
/// `out` must be valid for one write.
#[no_mangle]
pub unsafe extern "C" fn fl_orbit_period(epsilon: f64, w0: f64, out: *mut f64) -> FlStatus {
    guard(|| {
        non_null!(out);
        match orbit_period(epsilon, w0) {
            Ok(r) => {
                *out = r.period;
                FlStatus::Ok
            }
            Err(e) => from_error(e),
        }
    })
}

/// An RS steady state together with its sampling grid.
pub struct FlRsSteady {
    state: RsSteadyState,
}

#[repr(C)]
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct FlRsSteadySummary {
    pub epsilon: f64,
    pub w0: f64,
    pub wall_slope: f64,
    pub velocity: f64,
    pub delta_phi: f64,
    pub residual: f64,
    pub interior_zeros: u32,
}

/// Builds the steady state `v_j^±` (`sign` is +1 or −1) on a grid with
/// `n_modes` modes.
///
/// # Safety
/// `out` must be valid for one write.
#[no_mangle]
pub unsafe extern "C" fn fl_rs_steady_new(
    j: u32,
    sign: i32,
    epsilon: f64,
    n_modes: u32,
    out: *mut *mut FlRsSteady,
) -> FlStatus {
    guard(|| {
        non_null!(out);
        *out = ptr::null_mut();
        let sign = match sign_from(sign) {
            Ok(s) => s,
            Err(s) => return s,
        };
        match steady_solution(j as usize, sign, epsilon, GridSpec::new(n_modes as usize)) {
            Ok(state) => {
                *out = Box::into_raw(Box::new(FlRsSteady { state }));
                FlStatus::Ok
            }
            Err(e) => from_error(e),
        }
    })
}

/// # Safety
/// `h` must come from [`fl_rs_steady_new`] and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn fl_rs_steady_free(h: *mut FlRsSteady) {
    if !h.is_null() {
        drop(Box::from_raw(h));
    }
}

/// # Safety
/// `h` must be a live handle and `out` valid for one write.
#[no_mangle]
pub unsafe extern "C" fn fl_rs_steady_summary(h: *const FlRsSteady, out: *mut FlRsSteadySummary) -> FlStatus {
    guard(|| {
        non_null!(h, out);
        let s = &(*h).state;
        *out = FlRsSteadySummary {
            epsilon: s.epsilon,
            w0: s.w0,
            wall_slope: s.wall_slope,
            velocity: s.velocity,
            delta_phi: s.delta_phi(),
            residual: s.residual(),
            interior_zeros: s.interior_zeros() as u32,
        };
        FlStatus::Ok
    })
}

/// Grid abscissae and `v` values; both buffers need `out_len` entries.
///
/// # Safety
/// `x` and `v` must be valid for `len` writes; `out_len` must be valid.
#[no_mangle]
pub unsafe extern "C" fn fl_rs_steady_profile(
    h: *const FlRsSteady,
    x: *mut f64,
    v: *mut f64,
    len: usize,
    out_len: *mut usize,
) -> FlStatus {
    guard(|| {
        non_null!(h);
        let s = &(*h).state;
        let st = copy_out(s.v.grid().points(), x, len, out_len);
        if st != FlStatus::Ok {
            return st;
        }
        copy_out(s.v.values(), v, len, out_len)
    })
}

/// Comparison-test verdict: 1 stable, 0 unstable.
///
/// # Safety
/// `h` must be a live handle and `stable` valid for one write.
#[no_mangle]
pub unsafe extern "C" fn fl_rs_steady_is_stable(h: *const FlRsSteady, stable: *mut i32) -> FlStatus {
    guard(|| {
        non_null!(h, stable);
        let s = &(*h).state;
        match comparison_test(&s.v, s.epsilon) {
            Ok(c) => {
                *stable = i32::from(c.verdict == Verdict::Stable);
                FlStatus::Ok
            }
            Err(e) => from_error(e),
        }
    })
}

/// Conjugate pole pairs on the lines 0 and π.
pub struct FlPoleSet {
    poles: PoleSet,
}

/// # Safety
/// Each height pointer must be valid for its count of reads (or null when
/// the count is zero); `out` must be valid for one write.
#[no_mangle]
pub unsafe extern "C" fn fl_poles_new(
    epsilon: f64,
    heights_0: *const f64,
    n_0: usize,
    heights_pi: *const f64,
    n_pi: usize,
    out: *mut *mut FlPoleSet,
) -> FlStatus {
    guard(|| {
        non_null!(out);
        *out = ptr::null_mut();
        let read = |p: *const f64, n: usize| -> Option<Vec<f64>> {
            match (n, p.is_null()) {
                (0, _) => Some(Vec::new()),
                (_, true) => None,
                _ => Some(std::slice::from_raw_parts(p, n).to_vec()),
            }
        };
        let (Some(h0), Some(hpi)) = (read(heights_0, n_0), read(heights_pi, n_pi)) else {
            return fail(FlStatus::NullPointer, "null pointer: heights");
        };
        match PoleSet::two_line(epsilon, &h0, &hpi) {
            Ok(poles) => {
                *out = Box::into_raw(Box::new(FlPoleSet { poles }));
                FlStatus::Ok
            }
            Err(e) => from_error(e),
        }
    })
}

/// The coalescent steady state with `n_pairs` pairs on the line 0
/// (`sign` = +1) or π (`sign` = −1).
///
/// # Safety
/// `out` must be valid for one write.
#[no_mangle]
pub unsafe extern "C" fn fl_poles_coalescent(
    n_pairs: u32,
    epsilon: f64,
    sign: i32,
    out: *mut *mut FlPoleSet,
) -> FlStatus {
    guard(|| {
        non_null!(out);
        *out = ptr::null_mut();
        let line = match sign_from(sign) {
            Ok(Sign::Plus) => 0.0,
            Ok(Sign::Minus) => std::f64::consts::PI,
            Err(s) => return s,
        };
        match poles::coalescent_steady(n_pairs as usize, epsilon, line) {
            Ok(poles) => {
                *out = Box::into_raw(Box::new(FlPoleSet { poles }));
                FlStatus::Ok
            }
            Err(e) => from_error(e),
        }
    })
}

/// # Safety
/// `h` must come from this library and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn fl_poles_free(h: *mut FlPoleSet) {
    if !h.is_null() {
        drop(Box::from_raw(h));
    }
}

/// Heights in construction order: line 0 first, then line π.
///
/// # Safety
/// `out` must be valid for `len` writes; `out_len` must be valid.
#[no_mangle]
pub unsafe extern "C" fn fl_poles_heights(
    h: *const FlPoleSet,
    out: *mut f64,
    len: usize,
    out_len: *mut usize,
) -> FlStatus {
    guard(|| {
        non_null!(h);
        copy_out(&(*h).poles.heights(), out, len, out_len)
    })
}

/// Height velocities `F_j`.
///
/// # Safety
/// `out` must be valid for `len` writes; `out_len` must be valid.
#[no_mangle]
pub unsafe extern "C" fn fl_poles_force(
    h: *const FlPoleSet,
    out: *mut f64,
    len: usize,
    out_len: *mut usize,
) -> FlStatus {
    guard(|| {
        non_null!(h);
        match poles::force_f(&(*h).poles) {
            Ok(f) => copy_out(&f, out, len, out_len),
            Err(e) => from_error(e),
        }
    })
}

/// # Safety
/// `h` must be a live handle and `out` valid for one write.
#[no_mangle]
pub unsafe extern "C" fn fl_poles_liapunov(h: *const FlPoleSet, out: *mut f64) -> FlStatus {
    guard(|| {
        non_null!(h, out);
        match poles::pole_liapunov(&(*h).poles) {
            Ok(u) => {
                *out = u;
                FlStatus::Ok
            }
            Err(e) => from_error(e),
        }
    })
}

/// Flows the set toward a steady state in place. `converged` is set to 1
/// when the Newton polish reached its tolerance.
///
/// # Safety
/// `h` must be a live handle and `converged` valid for one write.
#[no_mangle]
pub unsafe extern "C" fn fl_poles_flow_to_steady(
    h: *mut FlPoleSet,
    t_max: f64,
    tol: f64,
    converged: *mut i32,
) -> FlStatus {
    guard(|| {
        non_null!(h, converged);
        if !(t_max > 0.0 && tol > 0.0) {
            return fail(FlStatus::InvalidArgument, "t_max and tol must be positive");
        }
        match poles::flow_to_steady(&(*h).poles, t_max, tol) {
            Ok((end, report)) => {
                (*h).poles = end;
                *converged = i32::from(report.converged);
                FlStatus::Ok
            }
            Err(e) => from_error(e),
        }
    })
}

/// Hessian classification of a steady set: 0 maximum, 1 saddle,
/// 2 inconclusive.
///
/// # Safety
/// `h` must be a live handle and `out` valid for one write.
#[no_mangle]
pub unsafe extern "C" fn fl_poles_classify(h: *const FlPoleSet, out: *mut i32) -> FlStatus {
    guard(|| {
        non_null!(h, out);
        match poles::hessian_classify(&(*h).poles) {
            Ok(r) => {
                *out = match r.classification {
                    Classification::Maximum => 0,
                    Classification::Saddle => 1,
                    Classification::InconclusiveByGershgorin => 2,
                };
                FlStatus::Ok
            }
            Err(e) => from_error(e),
        }
    })
}
