//! C ABI over `nmmetro`.
//!
//! Models and trajectories are opaque heap handles owned by the caller and
//! released with the matching `*_free`. Every entry point returns an
//! [`NmStatus`]; on failure [`nm_last_error_message`] describes the error for
//! the calling thread. Panics never cross the boundary.

use std::cell::RefCell;
use std::ffi::{c_char, CStr};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use nmmetro::dynamics::{propagate, ControlPulse, Parameter, Trajectory};
use nmmetro::entanglement::concurrence_closed;
use nmmetro::metrology::qfi_curve;
use nmmetro::{Error, InitialStateParam, ModelParams};

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NmStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    BufferTooSmall = 3,
    Numerical = 4,
    Panic = 5,
}

/// Estimation parameter selector for [`nm_trajectory_qfi`].
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NmParameter {
    Time = 0,
    Rabi = 1,
    Width = 2,
    Phase = 3,
}

impl From<NmParameter> for Parameter {
    fn from(p: NmParameter) -> Self {
        match p {
            NmParameter::Time => Parameter::Time,
            NmParameter::Rabi => Parameter::Rabi,
            NmParameter::Width => Parameter::Width,
            NmParameter::Phase => Parameter::Phase,
        }
    }
}

/// Opaque model handle.
pub struct NmModel {
    inner: ModelParams,
}

/// Opaque trajectory handle. Carries sensitivity tracks for every parameter.
pub struct NmTrajectory {
    inner: Trajectory,
}

thread_local! {
    static LAST_ERROR: RefCell<String> = const { RefCell::new(String::new()) };
}

fn set_error(msg: impl Into<String>) {
    LAST_ERROR.with(|e| *e.borrow_mut() = msg.into());
}

fn fail(status: NmStatus, msg: impl Into<String>) -> NmStatus {
    set_error(msg);
    status
}

fn from_core(e: Error) -> NmStatus {
    let status = match e {
        Error::InvalidParameter { .. } | Error::ExcitationOverflow { .. } | Error::InvalidPovm(_) => {
            NmStatus::InvalidArgument
        }
        _ => NmStatus::Numerical,
    };
    fail(status, e.to_string())
}

fn guard(f: impl FnOnce() -> NmStatus) -> NmStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(s) => s,
        Err(p) => {
            let msg = p
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| p.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "unknown panic".into());
            fail(NmStatus::Panic, format!("panic: {msg}"))
        }
    }
}

fn copy_out(src: &[f64], out: *mut f64, len: usize) -> NmStatus {
    if out.is_null() {
        return fail(NmStatus::NullPointer, "output buffer is null");
    }
    if len < src.len() {
        return fail(
            NmStatus::BufferTooSmall,
            format!("buffer holds {len} values, {} needed", src.len()),
        );
    }
    // SAFETY: caller guarantees `out` points to `len` writable doubles.
    unsafe { ptr::copy_nonoverlapping(src.as_ptr(), out, src.len()) };
    NmStatus::Ok
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn nm_version() -> *const c_char {
    static VERSION: &str = concat!(env!("CARGO_PKG_VERSION"), "\0");
    VERSION.as_ptr().cast()
}

/// Copies the calling thread's last error message into `buf` (truncated,
/// always NUL-terminated when `len > 0`). Returns the full message length in
/// bytes, excluding the terminator.
///
/// # Safety
/// `buf` must be null or point to `len` writable bytes.
#[no_mangle]
pub unsafe extern "C" fn nm_last_error_message(buf: *mut c_char, len: usize) -> usize {
    LAST_ERROR.with(|e| {
        let msg = e.borrow();
        if !buf.is_null() && len > 0 {
            let n = msg.len().min(len - 1);
            // SAFETY: `n < len` bytes plus the terminator fit in `buf`.
            unsafe {
                ptr::copy_nonoverlapping(msg.as_ptr(), buf.cast::<u8>(), n);
                *buf.add(n) = 0;
            }
        }
        msg.len()
    })
}

/// Creates a model. On success `*out` owns a handle for [`nm_model_free`].
///
/// # Safety
/// `out` must be null or a valid pointer to writable storage.
#[no_mangle]
pub unsafe extern "C" fn nm_model_new(
    a1: f64,
    a2: f64,
    rabi: f64,
    lambda: f64,
    horizon: f64,
    out: *mut *mut NmModel,
) -> NmStatus {
    guard(|| {
        if out.is_null() {
            return fail(NmStatus::NullPointer, "out is null");
        }
        match ModelParams::new(a1, a2, rabi, lambda, horizon) {
            Ok(inner) => {
                // SAFETY: checked non-null above.
                unsafe { *out = Box::into_raw(Box::new(NmModel { inner })) };
                NmStatus::Ok
            }
            Err(e) => from_core(e),
        }
    })
}

/// # Safety
/// `model` must be null or a handle from [`nm_model_new`] not yet freed.
#[no_mangle]
pub unsafe extern "C" fn nm_model_free(model: *mut NmModel) {
    if !model.is_null() {
        // SAFETY: ownership returns to Rust exactly once.
        drop(unsafe { Box::from_raw(model) });
    }
}

/// Propagates the state `(s, phi)` under a piecewise-constant pulse of
/// `n_segments` amplitudes (`amplitudes` may be null when `n_segments` is 0,
/// meaning no field) and samples `grid_points + 1` times over the horizon.
///
/// # Safety
/// `model` must be a live handle, `amplitudes` must point to `n_segments`
/// doubles, and `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn nm_propagate(
    model: *const NmModel,
    s: f64,
    phi: f64,
    amplitudes: *const f64,
    n_segments: usize,
    grid_points: usize,
    out: *mut *mut NmTrajectory,
) -> NmStatus {
    guard(|| {
        if model.is_null() || out.is_null() || (amplitudes.is_null() && n_segments > 0) {
            return fail(NmStatus::NullPointer, "model, amplitudes or out is null");
        }
        // SAFETY: non-null and live per the contract.
        let m = unsafe { &(*model).inner };
        let pulse = if n_segments == 0 {
            ControlPulse::zero(1, m.horizon)
        } else {
            // SAFETY: `amplitudes` holds `n_segments` doubles per the contract.
            let amps = unsafe { std::slice::from_raw_parts(amplitudes, n_segments) };
            ControlPulse::new(amps.to_vec(), m.horizon)
        };
        let result = pulse.and_then(|p| {
            let x0 = InitialStateParam::new(s, phi)?.amplitudes();
            propagate(m, &x0, &p, grid_points, &[Parameter::Rabi, Parameter::Width, Parameter::Phase])
        });
        match result {
            Ok(inner) => {
                // SAFETY: checked non-null above.
                unsafe { *out = Box::into_raw(Box::new(NmTrajectory { inner })) };
                NmStatus::Ok
            }
            Err(e) => from_core(e),
        }
    })
}

/// Number of samples, or 0 for a null handle.
///
/// # Safety
/// `traj` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn nm_trajectory_len(traj: *const NmTrajectory) -> usize {
    // SAFETY: null or live per the contract.
    unsafe { traj.as_ref() }.map_or(0, |t| t.inner.times.len())
}

/// # Safety
/// `traj` must be a live handle and `out` must hold `len` doubles.
#[no_mangle]
pub unsafe extern "C" fn nm_trajectory_times(traj: *const NmTrajectory, out: *mut f64, len: usize) -> NmStatus {
    guard(|| match unsafe { traj.as_ref() } {
        None => fail(NmStatus::NullPointer, "trajectory is null"),
        Some(t) => copy_out(&t.inner.times, out, len),
    })
}

/// Quantum Fisher information for `param` at every sample.
///
/// # Safety
/// `traj` must be a live handle and `out` must hold `len` doubles.
#[no_mangle]
pub unsafe extern "C" fn nm_trajectory_qfi(
    traj: *const NmTrajectory,
    param: NmParameter,
    out: *mut f64,
    len: usize,
) -> NmStatus {
    guard(|| match unsafe { traj.as_ref() } {
        None => fail(NmStatus::NullPointer, "trajectory is null"),
        Some(t) => match qfi_curve(&t.inner, param.into()) {
            Ok(c) => copy_out(&c.values, out, len),
            Err(e) => from_core(e),
        },
    })
}

/// Concurrence at every sample.
///
/// # Safety
/// `traj` must be a live handle and `out` must hold `len` doubles.
#[no_mangle]
pub unsafe extern "C" fn nm_trajectory_concurrence(traj: *const NmTrajectory, out: *mut f64, len: usize) -> NmStatus {
    guard(|| match unsafe { traj.as_ref() } {
        None => fail(NmStatus::NullPointer, "trajectory is null"),
        Some(t) => {
            let c: Vec<f64> = t.inner.states.iter().map(concurrence_closed).collect();
            copy_out(&c, out, len)
        }
    })
}

/// # Safety
/// `traj` must be null or a handle from [`nm_propagate`] not yet freed.
#[no_mangle]
pub unsafe extern "C" fn nm_trajectory_free(traj: *mut NmTrajectory) {
    if !traj.is_null() {
        // SAFETY: ownership returns to Rust exactly once.
        drop(unsafe { Box::from_raw(traj) });
    }
}

#[doc(hidden)]
pub fn last_error() -> String {
    let mut buf = vec![0 as c_char; 512];
    // SAFETY: buffer of the stated length.
    unsafe { nm_last_error_message(buf.as_mut_ptr(), buf.len()) };
    // SAFETY: always NUL-terminated.
    unsafe { CStr::from_ptr(buf.as_ptr()) }.to_string_lossy().into_owned()
}
