//! C ABI over `rvp-core`.
//!
//! Handles are opaque and owned by the caller once returned; release them
//! with the matching `*_free`. Fallible calls return an [`RvpStatus`] and
//! leave a message retrievable through [`rvp_last_error_message`] on the
//! calling thread. Strings returned as `char *` are released with
//! [`rvp_string_free`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::ptr;

use rvp_core::checkpoint::Checkpoint;
use rvp_core::config::{parse_config, RunConfig};
use rvp_core::error::Error;
use rvp_core::functionals::cutoff::{cutoff_phi, phi};
use rvp_core::harness::{self, Outputs, Session};

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum RvpStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidUtf8 = 2,
    Validation = 3,
    Configuration = 4,
    Parse = 5,
    IntegrationBlowup = 6,
    Undefined = 7,
    Resolution = 8,
    Coverage = 9,
    Resource = 10,
    Checkpoint = 11,
    OutputExists = 12,
    Io = 13,
    Json = 14,
    /// The session has not been run to its end time yet.
    NotRun = 15,
    Panic = 99,
}

impl From<&Error> for RvpStatus {
    fn from(e: &Error) -> Self {
        match e {
            Error::Validation(_) => RvpStatus::Validation,
            Error::Configuration(_) => RvpStatus::Configuration,
            Error::Parse { .. } => RvpStatus::Parse,
            Error::IntegrationBlowup { .. } => RvpStatus::IntegrationBlowup,
            Error::Undefined(_) => RvpStatus::Undefined,
            Error::Resolution { .. } => RvpStatus::Resolution,
            Error::Coverage(_) => RvpStatus::Coverage,
            Error::Resource(_) => RvpStatus::Resource,
            Error::Checkpoint(_) => RvpStatus::Checkpoint,
            Error::OutputExists(_) => RvpStatus::OutputExists,
            Error::Io(_) => RvpStatus::Io,
            Error::Json(_) => RvpStatus::Json,
        }
    }
}

/// Parsed run configuration.
pub struct RvpConfig {
    inner: RunConfig,
}

/// A simulation in memory, optionally already run to its end time.
pub struct RvpSession {
    inner: Session,
    outputs: Option<Outputs>,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_last_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn clear_last_error() {
    LAST_ERROR.with(|e| *e.borrow_mut() = None);
}

fn fail(status: RvpStatus, msg: impl Into<String>) -> RvpStatus {
    set_last_error(msg.into());
    status
}

fn fail_with(e: Error) -> RvpStatus {
    // Same JSON document the CLI prints, so callers can parse details.
    fail(RvpStatus::from(&e), harness::error_json(&e))
}

/// Run `f`, turning panics into [`RvpStatus::Panic`].
fn guard(f: impl FnOnce() -> RvpStatus) -> RvpStatus {
    clear_last_error();
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(s) => s,
        Err(p) => {
            let msg = p
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| p.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "panic".into());
            fail(RvpStatus::Panic, msg)
        }
    }
}

unsafe fn read_str<'a>(s: *const c_char) -> Result<&'a str, RvpStatus> {
    if s.is_null() {
        return Err(fail(RvpStatus::NullPointer, "null string argument"));
    }
    CStr::from_ptr(s).to_str().map_err(|e| fail(RvpStatus::InvalidUtf8, e.to_string()))
}

fn into_c_string(s: String) -> *mut c_char {
    match CString::new(s) {
        Ok(c) => c.into_raw(),
        Err(e) => {
            set_last_error(e.to_string());
            ptr::null_mut()
        }
    }
}

/// Message of the last failed call on this thread, or NULL. The pointer is
/// valid until the next fallible call on the same thread.
#[no_mangle]
pub extern "C" fn rvp_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn rvp_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// # Safety
/// `s` must be NULL or a string returned by this library and not yet freed.
#[no_mangle]
pub unsafe extern "C" fn rvp_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Parse a TOML run configuration.
///
/// # Safety
/// `text` must be a valid NUL-terminated string and `out` a writable pointer.
#[no_mangle]
pub unsafe extern "C" fn rvp_config_parse(text: *const c_char, out: *mut *mut RvpConfig) -> RvpStatus {
    guard(|| {
        if out.is_null() {
            return fail(RvpStatus::NullPointer, "null output handle");
        }
        *out = ptr::null_mut();
        let text = match read_str(text) {
            Ok(t) => t,
            Err(s) => return s,
        };
        match parse_config(text) {
            Ok(inner) => {
                *out = Box::into_raw(Box::new(RvpConfig { inner }));
                RvpStatus::Ok
            }
            Err(e) => fail_with(e),
        }
    })
}

/// # Safety
/// `cfg` must be NULL or a handle from [`rvp_config_parse`] not yet freed.
#[no_mangle]
pub unsafe extern "C" fn rvp_config_free(cfg: *mut RvpConfig) {
    if !cfg.is_null() {
        drop(Box::from_raw(cfg));
    }
}

/// # Safety
/// `cfg` must be a live config handle.
#[no_mangle]
pub unsafe extern "C" fn rvp_config_set_seed(cfg: *mut RvpConfig, seed: u64) -> RvpStatus {
    match cfg.as_mut() {
        Some(c) => {
            c.inner.seed = seed;
            RvpStatus::Ok
        }
        None => fail(RvpStatus::NullPointer, "null config handle"),
    }
}

/// Canonical content hash (hex), or NULL on a NULL handle.
///
/// # Safety
/// `cfg` must be NULL or a live config handle.
#[no_mangle]
pub unsafe extern "C" fn rvp_config_hash(cfg: *const RvpConfig) -> *mut c_char {
    match cfg.as_ref() {
        Some(c) => into_c_string(c.inner.hash()),
        None => {
            set_last_error("null config handle".into());
            ptr::null_mut()
        }
    }
}

/// Run to the end time, writing artifacts to `out_dir` (NULL for the
/// default directory). On success `*dir_out`, if non-NULL, receives the
/// directory path.
///
/// # Safety
/// `cfg` must be a live config handle; `out_dir` NULL or a valid string;
/// `dir_out` NULL or writable.
#[no_mangle]
pub unsafe extern "C" fn rvp_run(cfg: *const RvpConfig, out_dir: *const c_char, dir_out: *mut *mut c_char) -> RvpStatus {
    guard(|| {
        let Some(cfg) = cfg.as_ref() else {
            return fail(RvpStatus::NullPointer, "null config handle");
        };
        let out = if out_dir.is_null() {
            None
        } else {
            match read_str(out_dir) {
                Ok(s) => Some(Path::new(s)),
                Err(s) => return s,
            }
        };
        match harness::run(&cfg.inner, out) {
            Ok(dir) => {
                if !dir_out.is_null() {
                    *dir_out = into_c_string(dir.display().to_string());
                }
                RvpStatus::Ok
            }
            Err(e) => fail_with(e),
        }
    })
}

/// Sample the initial ensemble of `cfg`.
///
/// # Safety
/// `cfg` must be a live config handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn rvp_session_new(cfg: *const RvpConfig, out: *mut *mut RvpSession) -> RvpStatus {
    guard(|| {
        if out.is_null() {
            return fail(RvpStatus::NullPointer, "null output handle");
        }
        *out = ptr::null_mut();
        let Some(cfg) = cfg.as_ref() else {
            return fail(RvpStatus::NullPointer, "null config handle");
        };
        match Session::start(&cfg.inner) {
            Ok(inner) => {
                *out = Box::into_raw(Box::new(RvpSession { inner, outputs: None }));
                RvpStatus::Ok
            }
            Err(e) => fail_with(e),
        }
    })
}

/// Restore a session from checkpoint JSON.
///
/// # Safety
/// `json` must be a valid string and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn rvp_session_from_checkpoint(json: *const c_char, out: *mut *mut RvpSession) -> RvpStatus {
    guard(|| {
        if out.is_null() {
            return fail(RvpStatus::NullPointer, "null output handle");
        }
        *out = ptr::null_mut();
        let json = match read_str(json) {
            Ok(t) => t,
            Err(s) => return s,
        };
        match Checkpoint::from_json(json).and_then(Session::from_checkpoint) {
            Ok(inner) => {
                *out = Box::into_raw(Box::new(RvpSession { inner, outputs: None }));
                RvpStatus::Ok
            }
            Err(e) => fail_with(e),
        }
    })
}

/// # Safety
/// `s` must be NULL or a session handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn rvp_session_free(s: *mut RvpSession) {
    if !s.is_null() {
        drop(Box::from_raw(s));
    }
}

/// Integrate to the configured end time and keep the outputs in memory.
///
/// # Safety
/// `s` must be a live session handle.
#[no_mangle]
pub unsafe extern "C" fn rvp_session_run(s: *mut RvpSession) -> RvpStatus {
    guard(|| {
        let Some(s) = s.as_mut() else {
            return fail(RvpStatus::NullPointer, "null session handle");
        };
        match s.inner.run_to_end(|_| Ok(())) {
            Ok(o) => {
                s.outputs = Some(o);
                RvpStatus::Ok
            }
            Err(e) => fail_with(e),
        }
    })
}

/// Steps taken so far, or 0 for a NULL handle.
///
/// # Safety
/// `s` must be NULL or a live session handle.
#[no_mangle]
pub unsafe extern "C" fn rvp_session_step(s: *const RvpSession) -> u64 {
    s.as_ref().map_or(0, |s| s.inner.state.step)
}

/// Current simulation time, or NaN for a NULL handle.
///
/// # Safety
/// `s` must be NULL or a live session handle.
#[no_mangle]
pub unsafe extern "C" fn rvp_session_time(s: *const RvpSession) -> f64 {
    s.as_ref().map_or(f64::NAN, |s| s.inner.state.ensemble.t)
}

/// # Safety
/// `s` must be NULL or a live session handle.
#[no_mangle]
pub unsafe extern "C" fn rvp_session_particle_count(s: *const RvpSession) -> usize {
    s.as_ref().map_or(0, |s| s.inner.state.ensemble.particles.len())
}

/// Diagnostics CSV of a finished session; NULL before [`rvp_session_run`].
///
/// # Safety
/// `s` must be NULL or a live session handle.
#[no_mangle]
pub unsafe extern "C" fn rvp_session_diagnostics_csv(s: *const RvpSession) -> *mut c_char {
    match s.as_ref() {
        None => {
            set_last_error("null session handle".into());
            ptr::null_mut()
        }
        Some(RvpSession { outputs: None, .. }) => {
            set_last_error("session has not been run".into());
            ptr::null_mut()
        }
        Some(RvpSession { outputs: Some(o), .. }) => into_c_string(o.diagnostics_csv.clone()),
    }
}

/// Checkpoint JSON of the current state.
///
/// # Safety
/// `s` must be NULL or a live session handle.
#[no_mangle]
pub unsafe extern "C" fn rvp_session_checkpoint_json(s: *const RvpSession) -> *mut c_char {
    let Some(s) = s.as_ref() else {
        set_last_error("null session handle".into());
        return ptr::null_mut();
    };
    match s.inner.checkpoint().to_json() {
        Ok(j) => into_c_string(j),
        Err(e) => {
            set_last_error(harness::error_json(&e));
            ptr::null_mut()
        }
    }
}

/// Whether the session holds outputs from a completed run.
///
/// # Safety
/// `s` must be NULL or a live session handle.
#[no_mangle]
pub unsafe extern "C" fn rvp_session_status(s: *const RvpSession) -> RvpStatus {
    match s.as_ref() {
        None => RvpStatus::NullPointer,
        Some(s) if s.outputs.is_none() => RvpStatus::NotRun,
        Some(_) => RvpStatus::Ok,
    }
}

/// Smooth cutoff `phi(x)`.
#[no_mangle]
pub extern "C" fn rvp_phi(x: f64) -> f64 {
    phi(x)
}

/// Dyadic cutoff `phi(2^-l x)`.
#[no_mangle]
pub extern "C" fn rvp_cutoff_phi(x: f64, l: i32) -> f64 {
    cutoff_phi(x, l)
}
