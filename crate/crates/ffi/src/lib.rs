//! C interface to the pulse-critic solver.
//!
//! Every entry point returns a [`PcStatus`]; on failure a message is kept
//! per thread and can be fetched with [`pc_last_error`]. Handles are opaque
//! and must be released with the matching `*_free` function.

use std::cell::RefCell;
use std::ffi::{c_char, CStr};
use std::panic::{self, AssertUnwindSafe};
use std::ptr;

use pulse_critic::field::{FieldState, RadialGrid};
use pulse_critic::pipeline::{self, BumpSpec, Resolution, RunSpec};
use pulse_critic::profiles::{build_initial_data, check_outgoing_constraint, DataParams, PulseProfile};
use pulse_critic::solver::{RunOutcome, Verdict};
use pulse_critic::{profiles, Error};

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PcStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    InvalidSupport = 3,
    RootSolveFailure = 4,
    ResolutionError = 5,
    InvalidGrid = 6,
    RunFailure = 7,
    NoValue = 8,
    BufferTooSmall = 9,
    Panic = 10,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PcVerdict {
    Global = 0,
    Blowup = 1,
    Inconclusive = 2,
}

/// Data parameters for [`pc_data_new`].
#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct PcDataParams {
    pub p: u32,
    pub eps0: f64,
    pub delta: f64,
    pub center: f64,
    pub width: f64,
    pub amplitude: f64,
    /// Cell count; 0 picks 64 cells across `delta`.
    pub grid_n: usize,
    /// Outer radius; 0 picks what a run to `t_max` needs.
    pub r_max: f64,
    pub t_max: f64,
}

/// Sampled initial data at `t = 1`.
pub struct PcData {
    spec: RunSpec,
    state: FieldState,
    res1: f64,
    res2: f64,
}

/// A finished run.
pub struct PcOutcome {
    outcome: RunOutcome,
    mu_min: Option<f64>,
}

thread_local! {
    static LAST_ERROR: RefCell<String> = const { RefCell::new(String::new()) };
}

fn set_error(msg: impl Into<String>) {
    LAST_ERROR.with(|e| *e.borrow_mut() = msg.into());
}

fn status_of(e: &Error) -> PcStatus {
    match e {
        Error::InvalidSupport { .. } => PcStatus::InvalidSupport,
        Error::RootSolveFailure { .. } | Error::DegenerateJacobian { .. } => PcStatus::RootSolveFailure,
        Error::ResolutionError { .. } => PcStatus::ResolutionError,
        Error::InvalidGrid(_) => PcStatus::InvalidGrid,
        Error::InvalidParams(_) | Error::InvalidConfig(_) | Error::ConfigError { .. } => PcStatus::InvalidArgument,
        _ => PcStatus::RunFailure,
    }
}

fn guard(f: impl FnOnce() -> Result<(), (PcStatus, String)>) -> PcStatus {
    match panic::catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            set_error("");
            PcStatus::Ok
        }
        Ok(Err((status, msg))) => {
            set_error(msg);
            status
        }
        Err(_) => {
            set_error("internal panic");
            PcStatus::Panic
        }
    }
}

fn fail(e: Error) -> (PcStatus, String) {
    (status_of(&e), e.to_string())
}

fn null(name: &str) -> (PcStatus, String) {
    (PcStatus::NullPointer, format!("{name} is null"))
}

/// Builds constrained short-pulse data and stores a handle in `*out`.
///
/// # Safety
/// `params` must point to a valid `PcDataParams`; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn pc_data_new(params: *const PcDataParams, out: *mut *mut PcData) -> PcStatus {
    guard(|| {
        let q = params.as_ref().ok_or_else(|| null("params"))?;
        if out.is_null() {
            return Err(null("out"));
        }
        *out = ptr::null_mut();
        if !(q.t_max > 1.0) {
            return Err((PcStatus::InvalidArgument, format!("t_max must exceed 1, got {}", q.t_max)));
        }
        let data = DataParams::new(q.delta, q.eps0, q.p).map_err(fail)?;
        let bump = BumpSpec {
            center: q.center,
            width: q.width,
            amplitude: q.amplitude,
        };
        let mut spec = RunSpec::new(data, bump, q.t_max);
        if q.grid_n > 0 {
            spec.resolution = Resolution::Cells(q.grid_n);
        }
        if q.r_max > 0.0 {
            spec.r_max = Some(q.r_max);
        }
        let grid: RadialGrid = spec.grid().map_err(fail)?;
        let bump_fn = profiles::bump_profile(q.center, q.width, q.amplitude).map_err(fail)?;
        let profile = PulseProfile::constrained(bump_fn, data);
        let state = build_initial_data(&profile, &data, &grid).map_err(fail)?;
        let res = check_outgoing_constraint(&state, &data);
        *out = Box::into_raw(Box::new(PcData {
            spec,
            state,
            res1: res.res1,
            res2: res.res2,
        }));
        Ok(())
    })
}

/// Number of grid points, or 0 for a null handle.
///
/// # Safety
/// `data` must be null or a live handle from [`pc_data_new`].
#[no_mangle]
pub unsafe extern "C" fn pc_data_len(data: *const PcData) -> usize {
    data.as_ref().map_or(0, |d| d.state.grid.len())
}

/// Copies radii, `phi` and `phi_t` into caller buffers of length `len`.
/// Any output pointer may be null to skip it.
///
/// # Safety
/// Non-null buffers must hold `len` doubles.
#[no_mangle]
pub unsafe extern "C" fn pc_data_copy(
    data: *const PcData,
    r: *mut f64,
    phi: *mut f64,
    phit: *mut f64,
    len: usize,
) -> PcStatus {
    guard(|| {
        let d = data.as_ref().ok_or_else(|| null("data"))?;
        let n = d.state.grid.len();
        if len < n {
            return Err((PcStatus::BufferTooSmall, format!("buffers hold {len} values, need {n}")));
        }
        let radii: Vec<f64> = d.state.grid.nodes().collect();
        for (src, dst) in [(&radii, r), (&d.state.phi, phi), (&d.state.phit, phit)] {
            if !dst.is_null() {
                ptr::copy_nonoverlapping(src.as_ptr(), dst, n);
            }
        }
        Ok(())
    })
}

/// Outgoing-constraint residuals of the sampled data.
///
/// # Safety
/// `data` must be a live handle; `res1` and `res2` must be writable.
#[no_mangle]
pub unsafe extern "C" fn pc_data_constraint(data: *const PcData, res1: *mut f64, res2: *mut f64) -> PcStatus {
    guard(|| {
        let d = data.as_ref().ok_or_else(|| null("data"))?;
        if res1.is_null() || res2.is_null() {
            return Err(null("output"));
        }
        *res1 = d.res1;
        *res2 = d.res2;
        Ok(())
    })
}

/// # Safety
/// `data` must be null or a handle from [`pc_data_new`] not yet freed.
#[no_mangle]
pub unsafe extern "C" fn pc_data_free(data: *mut PcData) {
    if !data.is_null() {
        drop(Box::from_raw(data));
    }
}

/// Evolves the data to its `t_max`, tracking geometry when `geometry` is
/// nonzero.
///
/// # Safety
/// `data` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn pc_run(data: *const PcData, geometry: i32, out: *mut *mut PcOutcome) -> PcStatus {
    guard(|| {
        let d = data.as_ref().ok_or_else(|| null("data"))?;
        if out.is_null() {
            return Err(null("out"));
        }
        *out = ptr::null_mut();
        let mut spec = d.spec;
        if geometry == 0 {
            spec.geometry = None;
        }
        let art = pipeline::execute_from(&spec, d.state.clone(), None::<fn(&FieldState)>).map_err(fail)?;
        *out = Box::into_raw(Box::new(PcOutcome {
            mu_min: art.summary.geometry.map(|g| g.mu_min),
            outcome: art.summary.outcome,
        }));
        Ok(())
    })
}

/// # Safety
/// `outcome` must be a live handle from [`pc_run`].
#[no_mangle]
pub unsafe extern "C" fn pc_outcome_verdict(outcome: *const PcOutcome, verdict: *mut PcVerdict) -> PcStatus {
    guard(|| {
        let o = outcome.as_ref().ok_or_else(|| null("outcome"))?;
        if verdict.is_null() {
            return Err(null("verdict"));
        }
        *verdict = match o.outcome.label {
            Verdict::Global => PcVerdict::Global,
            Verdict::Blowup => PcVerdict::Blowup,
            Verdict::Inconclusive => PcVerdict::Inconclusive,
        };
        Ok(())
    })
}

unsafe fn optional(outcome: *const PcOutcome, value: *mut f64, get: impl Fn(&PcOutcome) -> Option<f64>) -> PcStatus {
    guard(|| {
        let o = outcome.as_ref().ok_or_else(|| null("outcome"))?;
        if value.is_null() {
            return Err(null("value"));
        }
        match get(o) {
            Some(v) => {
                *value = v;
                Ok(())
            }
            None => Err((PcStatus::NoValue, "value not available for this run".into())),
        }
    })
}

/// First breakdown time; [`PcStatus::NoValue`] when the run did not break down.
///
/// # Safety
/// `outcome` must be a live handle; `value` must be writable.
#[no_mangle]
pub unsafe extern "C" fn pc_outcome_t_star(outcome: *const PcOutcome, value: *mut f64) -> PcStatus {
    optional(outcome, value, |o| o.outcome.t_star)
}

/// Final time reached.
///
/// # Safety
/// `outcome` must be a live handle; `value` must be writable.
#[no_mangle]
pub unsafe extern "C" fn pc_outcome_t_final(outcome: *const PcOutcome, value: *mut f64) -> PcStatus {
    optional(outcome, value, |o| Some(o.outcome.t_final))
}

/// Smallest `mu` along the tracked characteristics.
///
/// # Safety
/// `outcome` must be a live handle; `value` must be writable.
#[no_mangle]
pub unsafe extern "C" fn pc_outcome_mu_min(outcome: *const PcOutcome, value: *mut f64) -> PcStatus {
    optional(outcome, value, |o| o.mu_min)
}

/// Decay exponent of `sup |d phi|` for global runs.
///
/// # Safety
/// `outcome` must be a live handle; `value` must be writable.
#[no_mangle]
pub unsafe extern "C" fn pc_outcome_decay_exponent(outcome: *const PcOutcome, value: *mut f64) -> PcStatus {
    optional(outcome, value, |o| o.outcome.decay.map(|d| d.exponent))
}

/// # Safety
/// `outcome` must be null or a handle from [`pc_run`] not yet freed.
#[no_mangle]
pub unsafe extern "C" fn pc_outcome_free(outcome: *mut PcOutcome) {
    if !outcome.is_null() {
        drop(Box::from_raw(outcome));
    }
}

/// Copies the calling thread's last error message, NUL-terminated and
/// truncated to `len` bytes. Returns the full message length.
///
/// # Safety
/// `buf` must be null or hold `len` bytes.
#[no_mangle]
pub unsafe extern "C" fn pc_last_error(buf: *mut c_char, len: usize) -> usize {
    LAST_ERROR.with(|e| {
        let msg = e.borrow();
        if !buf.is_null() && len > 0 {
            let n = msg.len().min(len - 1);
            ptr::copy_nonoverlapping(msg.as_ptr().cast::<c_char>(), buf, n);
            *buf.add(n) = 0;
        }
        msg.len()
    })
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn pc_version() -> *const c_char {
    static VERSION: &CStr = match CStr::from_bytes_with_nul(concat!(env!("CARGO_PKG_VERSION"), "\0").as_bytes()) {
        Ok(s) => s,
        Err(_) => panic!("version contains a NUL"),
    };
    VERSION.as_ptr()
}
