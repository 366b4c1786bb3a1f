//! C ABI for the `dsls` simulator.
//!
//! Conventions:
//! - Handles (`DslsConfig`, `DslsSummary`) are opaque; create them through
//!   this API and release them with the matching `_free` function.
//! - Every fallible function returns a [`DslsStatus`]; `DSLS_STATUS_OK` is 0.
//!   On failure, [`dsls_last_error_message`] returns a human-readable message
//!   for the most recent failing call on the current thread.
//! - Strings returned through out-pointers are heap-allocated, NUL-terminated
//!   UTF-8 owned by the caller; release them with [`dsls_string_free`].
//! - Handles are not internally synchronized: don't share one handle across
//!   threads without external locking. Distinct handles are independent.
//! - Panics never unwind across the boundary; they surface as
//!   `DSLS_STATUS_INTERNAL`.

use dsls::harness::{self, ExperimentConfig, Mode, SummaryRow};
use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::ptr;

/// Status code returned by every fallible API function.
#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum DslsStatus {
    Ok = 0,
    /// A required pointer argument was NULL.
    NullArgument = 1,
    /// A string argument was not valid UTF-8.
    Utf8Error = 2,
    /// The configuration failed to parse or validate.
    InvalidConfig = 3,
    /// The simulation hit a numerical failure (e.g. a singular information
    /// matrix or a solver that did not converge).
    NumericalFailure = 4,
    /// Reading or writing files failed.
    IoError = 5,
    /// An index argument was out of range.
    OutOfRange = 6,
    /// An internal invariant failed (a bug; details in the error message).
    Internal = 7,
}

/// Column selector for [`dsls_summary_value`].
#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum DslsSummaryField {
    /// Round index `t` (1-based), returned as a double.
    T = 0,
    /// Mean over (repeat, sensor) pairs of the plain LS estimate's error.
    LsErrMean = 1,
    LsErrStd = 2,
    /// Mean over (repeat, sensor) pairs of the sparse estimate's error.
    SparseErrMean = 3,
    SparseErrStd = 4,
    /// Mean over repeats of cumulative regret.
    RegretMean = 5,
    RegretStd = 6,
    CoopRatioMean = 7,
    /// Fraction of (repeat, sensor) pairs whose zero set matches the truth.
    ZeroAgreeFrac = 8,
    /// How many (repeat, sensor) pairs first became stably correct at this
    /// round, returned as a double.
    T0Count = 9,
}

/// Opaque experiment configuration handle.
pub struct DslsConfig(ExperimentConfig);

/// Opaque result handle: one row of aggregate statistics per round.
pub struct DslsSummary(Vec<SummaryRow>);

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let c = CString::new(msg)
        .unwrap_or_else(|_| CString::new("error message contained an interior NUL").unwrap());
    LAST_ERROR.with(|slot| *slot.borrow_mut() = Some(c));
}

fn fail(e: dsls::Error) -> DslsStatus {
    let status = match &e {
        dsls::Error::Config(_) => DslsStatus::InvalidConfig,
        dsls::Error::Numerical(_) => DslsStatus::NumericalFailure,
        dsls::Error::Io(_) | dsls::Error::Csv(_) => DslsStatus::IoError,
    };
    set_error(e.to_string());
    status
}

fn fail_with(status: DslsStatus, msg: impl Into<String>) -> DslsStatus {
    set_error(msg.into());
    status
}

/// Run `f`, converting any panic into `DSLS_STATUS_INTERNAL`.
fn guard(f: impl FnOnce() -> DslsStatus) -> DslsStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(status) => status,
        Err(payload) => {
            let msg = payload
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| payload.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "unknown panic".into());
            fail_with(DslsStatus::Internal, format!("internal panic: {msg}"))
        }
    }
}

unsafe fn cstr_arg<'a>(ptr: *const c_char, what: &str) -> Result<&'a str, DslsStatus> {
    if ptr.is_null() {
        return Err(fail_with(
            DslsStatus::NullArgument,
            format!("{what}: NULL pointer"),
        ));
    }
    CStr::from_ptr(ptr)
        .to_str()
        .map_err(|e| fail_with(DslsStatus::Utf8Error, format!("{what}: {e}")))
}

/// Message from the most recent failing call on this thread, or NULL if no
/// call has failed yet. The pointer stays valid until the next failing call
/// on the same thread; do not free it.
#[no_mangle]
pub extern "C" fn dsls_last_error_message() -> *const c_char {
    LAST_ERROR.with(|slot| {
        slot.borrow()
            .as_ref()
            .map_or(ptr::null(), |c| c.as_ptr())
    })
}

/// Release a string returned by this API. NULL is a no-op.
#[no_mangle]
pub unsafe extern "C" fn dsls_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Create the built-in reference configuration (six sensors on a ring,
/// five-coordinate parameter with two active entries, 200 rounds, 100
/// repeats). Release with [`dsls_config_free`].
#[no_mangle]
pub extern "C" fn dsls_config_default() -> *mut DslsConfig {
    Box::into_raw(Box::new(DslsConfig(harness::default_config())))
}

/// Parse and validate a JSON configuration document. On success, `*out`
/// receives a new handle (release with [`dsls_config_free`]).
#[no_mangle]
pub unsafe extern "C" fn dsls_config_parse(
    json: *const c_char,
    out: *mut *mut DslsConfig,
) -> DslsStatus {
    guard(|| {
        if out.is_null() {
            return fail_with(DslsStatus::NullArgument, "out: NULL pointer");
        }
        *out = ptr::null_mut();
        let text = match cstr_arg(json, "json") {
            Ok(t) => t,
            Err(status) => return status,
        };
        let cfg: ExperimentConfig = match harness::parse_config(text) {
            Ok(c) => c,
            Err(e) => return fail(e),
        };
        if let Err(e) = cfg.validate() {
            return fail(e);
        }
        *out = Box::into_raw(Box::new(DslsConfig(cfg)));
        DslsStatus::Ok
    })
}

/// Serialize a configuration to pretty-printed JSON. On success, `*out`
/// receives a string owned by the caller (release with [`dsls_string_free`]).
#[no_mangle]
pub unsafe extern "C" fn dsls_config_to_json(
    cfg: *const DslsConfig,
    out: *mut *mut c_char,
) -> DslsStatus {
    guard(|| {
        if out.is_null() {
            return fail_with(DslsStatus::NullArgument, "out: NULL pointer");
        }
        *out = ptr::null_mut();
        let Some(cfg) = cfg.as_ref() else {
            return fail_with(DslsStatus::NullArgument, "cfg: NULL pointer");
        };
        match CString::new(cfg.0.to_json_pretty()) {
            Ok(s) => {
                *out = s.into_raw();
                DslsStatus::Ok
            }
            Err(e) => fail_with(DslsStatus::Internal, format!("config JSON: {e}")),
        }
    })
}

/// Override the master seed.
#[no_mangle]
pub unsafe extern "C" fn dsls_config_set_seed(cfg: *mut DslsConfig, seed: u64) -> DslsStatus {
    guard(|| {
        let Some(cfg) = cfg.as_mut() else {
            return fail_with(DslsStatus::NullArgument, "cfg: NULL pointer");
        };
        cfg.0.seed = seed;
        DslsStatus::Ok
    })
}

/// Override the mode: "distributed", "non_cooperative", or "ls_only".
#[no_mangle]
pub unsafe extern "C" fn dsls_config_set_mode(
    cfg: *mut DslsConfig,
    mode: *const c_char,
) -> DslsStatus {
    guard(|| {
        let Some(cfg) = cfg.as_mut() else {
            return fail_with(DslsStatus::NullArgument, "cfg: NULL pointer");
        };
        let text = match cstr_arg(mode, "mode") {
            Ok(t) => t,
            Err(status) => return status,
        };
        match text.parse::<Mode>() {
            Ok(mode) => {
                cfg.0.mode = mode;
                DslsStatus::Ok
            }
            Err(e) => fail(e),
        }
    })
}

/// Release a configuration handle. NULL is a no-op.
#[no_mangle]
pub unsafe extern "C" fn dsls_config_free(cfg: *mut DslsConfig) {
    if !cfg.is_null() {
        drop(Box::from_raw(cfg));
    }
}

/// Run every repeat of the experiment and aggregate per-round statistics.
///
/// `out_dir` may be NULL (no files) or a directory path; when given, one
/// `run_<s>.csv` per repeat plus `summary.csv` are written there (the
/// directory is created if needed). `workers >= 1` sets repeat-level
/// parallelism; results are byte- and bit-identical for any worker count.
/// On success, `*out` receives a summary handle (release with
/// [`dsls_summary_free`]).
#[no_mangle]
pub unsafe extern "C" fn dsls_run(
    cfg: *const DslsConfig,
    out_dir: *const c_char,
    workers: usize,
    out: *mut *mut DslsSummary,
) -> DslsStatus {
    guard(|| {
        if out.is_null() {
            return fail_with(DslsStatus::NullArgument, "out: NULL pointer");
        }
        *out = ptr::null_mut();
        let Some(cfg) = cfg.as_ref() else {
            return fail_with(DslsStatus::NullArgument, "cfg: NULL pointer");
        };
        let dir = if out_dir.is_null() {
            None
        } else {
            match cstr_arg(out_dir, "out_dir") {
                Ok(t) => Some(t),
                Err(status) => return status,
            }
        };
        match harness::run_experiment(&cfg.0, dir.map(Path::new), workers) {
            Ok(result) => {
                *out = Box::into_raw(Box::new(DslsSummary(result.summary)));
                DslsStatus::Ok
            }
            Err(e) => fail(e),
        }
    })
}

/// Number of rounds (rows) in a summary; 0 for NULL.
#[no_mangle]
pub unsafe extern "C" fn dsls_summary_rounds(summary: *const DslsSummary) -> usize {
    summary.as_ref().map_or(0, |s| s.0.len())
}

/// Read one aggregate statistic. `row` is 0-based (row `k` describes round
/// `k + 1`); integer-valued fields are returned as doubles.
#[no_mangle]
pub unsafe extern "C" fn dsls_summary_value(
    summary: *const DslsSummary,
    row: usize,
    field: DslsSummaryField,
    out: *mut f64,
) -> DslsStatus {
    guard(|| {
        if out.is_null() {
            return fail_with(DslsStatus::NullArgument, "out: NULL pointer");
        }
        let Some(summary) = summary.as_ref() else {
            return fail_with(DslsStatus::NullArgument, "summary: NULL pointer");
        };
        let Some(r) = summary.0.get(row) else {
            return fail_with(
                DslsStatus::OutOfRange,
                format!("row {row} out of range ({} rows)", summary.0.len()),
            );
        };
        *out = match field {
            DslsSummaryField::T => r.t as f64,
            DslsSummaryField::LsErrMean => r.ls_err_mean,
            DslsSummaryField::LsErrStd => r.ls_err_std,
            DslsSummaryField::SparseErrMean => r.sparse_err_mean,
            DslsSummaryField::SparseErrStd => r.sparse_err_std,
            DslsSummaryField::RegretMean => r.regret_mean,
            DslsSummaryField::RegretStd => r.regret_std,
            DslsSummaryField::CoopRatioMean => r.coop_ratio_mean,
            DslsSummaryField::ZeroAgreeFrac => r.zero_agree_frac,
            DslsSummaryField::T0Count => r.t0_count as f64,
        };
        DslsStatus::Ok
    })
}

/// Release a summary handle. NULL is a no-op.
#[no_mangle]
pub unsafe extern "C" fn dsls_summary_free(summary: *mut DslsSummary) {
    if !summary.is_null() {
        drop(Box::from_raw(summary));
    }
}
