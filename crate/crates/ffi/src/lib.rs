//! C ABI over `thz_noma`.
//!
//! Every fallible function returns a [`ThzStatus`]. On failure a message is
//! stored per thread and can be read with [`thz_last_error_message`].
//! Handles are opaque; free them with the matching `*_free` function.

use std::cell::RefCell;
use std::ffi::{c_char, CStr};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use thz_noma::pairing::{threshold_far, threshold_near, PairingError};
use thz_noma::scenario::{csv_string, run_sweep, Evaluators, Preset, ScenarioConfig, ScenarioError, SweepRow};

/// Result codes.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ThzStatus {
    Ok = 0,
    /// A required pointer argument was null.
    Null = 1,
    /// An argument lies outside its mathematical domain.
    Domain = 2,
    /// The scenario could not be parsed or validated.
    Config = 3,
    /// An output buffer or index was out of range.
    Range = 4,
    /// Sampling or evaluation failed.
    Sampling = 5,
    /// A Rust panic was caught at the boundary.
    Panic = 6,
}

/// Parsed scenario.
pub struct ThzScenario {
    config: ScenarioConfig,
}

/// Rows produced by running a scenario.
pub struct ThzSweep {
    rows: Vec<SweepRow>,
}

/// Numeric fields of one sweep row. Absent values are NaN.
#[repr(C)]
pub struct ThzRow {
    pub sweep_value: f64,
    pub estimate: f64,
    pub std_error: f64,
    /// 1 near, 2 far.
    pub user: u32,
    /// 1 NOMA, 2 OMA.
    pub mode: u32,
    /// Nonzero when the row status is "ok".
    pub ok: u32,
}

thread_local! {
    static LAST_ERROR: RefCell<Vec<u8>> = const { RefCell::new(Vec::new()) };
}

fn set_error(msg: impl std::fmt::Display) {
    LAST_ERROR.with(|e| *e.borrow_mut() = msg.to_string().into_bytes());
}

fn clear_error() {
    LAST_ERROR.with(|e| e.borrow_mut().clear());
}

fn fail(status: ThzStatus, msg: impl std::fmt::Display) -> ThzStatus {
    set_error(msg);
    status
}

fn guard<F: FnOnce() -> ThzStatus>(f: F) -> ThzStatus {
    clear_error();
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(s) => s,
        Err(p) => {
            let msg = p
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| p.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "unknown panic".into());
            fail(ThzStatus::Panic, format!("panic: {msg}"))
        }
    }
}

fn pairing_status(e: &PairingError) -> ThzStatus {
    match e {
        PairingError::Domain(_) | PairingError::MissingThresholds(_) | PairingError::EmptyFarRegion { .. } => {
            ThzStatus::Domain
        }
        PairingError::SamplingExhausted { .. } => ThzStatus::Sampling,
    }
}

fn scenario_status(e: &ScenarioError) -> ThzStatus {
    match e {
        ScenarioError::Config(_) | ScenarioError::Json(_) => ThzStatus::Config,
        ScenarioError::Io(_) | ScenarioError::Csv(_) => ThzStatus::Sampling,
    }
}

/// Copies `text` plus a terminating NUL into `buf` if it fits. Returns the
/// number of bytes required including the NUL.
unsafe fn copy_out(text: &[u8], buf: *mut c_char, len: usize) -> usize {
    let need = text.len() + 1;
    if !buf.is_null() && len >= need {
        ptr::copy_nonoverlapping(text.as_ptr(), buf.cast::<u8>(), text.len());
        *buf.add(text.len()) = 0;
    }
    need
}

unsafe fn write_out<T>(out: *mut T, value: T) -> ThzStatus {
    if out.is_null() {
        return fail(ThzStatus::Null, "output pointer is null");
    }
    out.write(value);
    ThzStatus::Ok
}

/// Length of the last error message in bytes, including the NUL; 0 if none.
#[no_mangle]
pub extern "C" fn thz_last_error_length() -> usize {
    LAST_ERROR.with(|e| {
        let e = e.borrow();
        if e.is_empty() {
            0
        } else {
            e.len() + 1
        }
    })
}

/// Copies the last error message into `buf`. Returns the required size
/// including the NUL; nothing is written when `len` is too small.
///
/// # Safety
/// `buf` must be null or valid for `len` bytes.
#[no_mangle]
pub unsafe extern "C" fn thz_last_error_message(buf: *mut c_char, len: usize) -> usize {
    LAST_ERROR.with(|e| copy_out(&e.borrow(), buf, len))
}

/// Near-user pairing threshold R_th1 in metres.
///
/// # Safety
/// `out` must be null or valid for writing one double.
#[no_mangle]
pub unsafe extern "C" fn thz_threshold_near(a1: f64, k: f64, out: *mut f64) -> ThzStatus {
    guard(|| match threshold_near(a1, k) {
        Ok(v) => write_out(out, v),
        Err(e) => fail(pairing_status(&e), e),
    })
}

/// Far-user pairing threshold R_th2 in metres.
///
/// # Safety
/// `out` must be null or valid for writing one double.
#[no_mangle]
pub unsafe extern "C" fn thz_threshold_far(a1: f64, k: f64, out: *mut f64) -> ThzStatus {
    guard(|| match threshold_far(a1, k) {
        Ok(v) => write_out(out, v),
        Err(e) => fail(pairing_status(&e), e),
    })
}

unsafe fn new_scenario(config: ScenarioConfig, out: *mut *mut ThzScenario) -> ThzStatus {
    if out.is_null() {
        return fail(ThzStatus::Null, "output pointer is null");
    }
    if let Err(e) = config.validate() {
        return fail(scenario_status(&e), e);
    }
    out.write(Box::into_raw(Box::new(ThzScenario { config })));
    ThzStatus::Ok
}

/// Parses a scenario from a NUL-terminated JSON string.
///
/// # Safety
/// `json` must be null or a valid C string; `out` must be null or writable.
#[no_mangle]
pub unsafe extern "C" fn thz_scenario_from_json(json: *const c_char, out: *mut *mut ThzScenario) -> ThzStatus {
    guard(|| {
        if json.is_null() {
            return fail(ThzStatus::Null, "json is null");
        }
        let text = match CStr::from_ptr(json).to_str() {
            Ok(t) => t,
            Err(e) => return fail(ThzStatus::Config, format!("json is not UTF-8: {e}")),
        };
        match ScenarioConfig::from_json(text) {
            Ok(c) => new_scenario(c, out),
            Err(e) => fail(scenario_status(&e), e),
        }
    })
}

/// Loads a built-in scenario by name ("fig2", "fig3", "fig4").
///
/// # Safety
/// `name` must be null or a valid C string; `out` must be null or writable.
#[no_mangle]
pub unsafe extern "C" fn thz_scenario_preset(name: *const c_char, out: *mut *mut ThzScenario) -> ThzStatus {
    guard(|| {
        if name.is_null() {
            return fail(ThzStatus::Null, "name is null");
        }
        let parsed = CStr::from_ptr(name).to_str().ok().and_then(|s| s.parse::<Preset>().ok());
        match parsed {
            Some(p) => new_scenario(p.config(), out),
            None => fail(ThzStatus::Config, "unknown preset"),
        }
    })
}

/// Overrides the Monte Carlo trial count.
///
/// # Safety
/// `scenario` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn thz_scenario_set_trials(scenario: *mut ThzScenario, trials: u64) -> ThzStatus {
    guard(|| {
        let Some(s) = scenario.as_mut() else { return fail(ThzStatus::Null, "scenario is null") };
        if trials == 0 {
            return fail(ThzStatus::Domain, "trials must be positive");
        }
        s.config.trials = trials;
        ThzStatus::Ok
    })
}

/// Overrides the Monte Carlo seed.
///
/// # Safety
/// `scenario` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn thz_scenario_set_seed(scenario: *mut ThzScenario, seed: u64) -> ThzStatus {
    guard(|| {
        let Some(s) = scenario.as_mut() else { return fail(ThzStatus::Null, "scenario is null") };
        s.config.seed = seed;
        ThzStatus::Ok
    })
}

/// # Safety
/// `scenario` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn thz_scenario_free(scenario: *mut ThzScenario) {
    if !scenario.is_null() {
        drop(Box::from_raw(scenario));
    }
}

/// Evaluates every grid point, scheme, user, mode and method.
///
/// # Safety
/// `scenario` must be null or a live handle; `out` must be null or writable.
#[no_mangle]
pub unsafe extern "C" fn thz_sweep_run(scenario: *const ThzScenario, out: *mut *mut ThzSweep) -> ThzStatus {
    guard(|| {
        let Some(s) = scenario.as_ref() else { return fail(ThzStatus::Null, "scenario is null") };
        if out.is_null() {
            return fail(ThzStatus::Null, "output pointer is null");
        }
        match run_sweep(&s.config, &Evaluators::default()) {
            Ok(rows) => {
                out.write(Box::into_raw(Box::new(ThzSweep { rows })));
                ThzStatus::Ok
            }
            Err(e) => fail(scenario_status(&e), e),
        }
    })
}

/// Number of rows; 0 for a null handle.
///
/// # Safety
/// `sweep` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn thz_sweep_len(sweep: *const ThzSweep) -> usize {
    sweep.as_ref().map_or(0, |s| s.rows.len())
}

/// Numeric fields of row `index`.
///
/// # Safety
/// `sweep` must be null or a live handle; `out` must be null or writable.
#[no_mangle]
pub unsafe extern "C" fn thz_sweep_row(sweep: *const ThzSweep, index: usize, out: *mut ThzRow) -> ThzStatus {
    guard(|| {
        let Some(s) = sweep.as_ref() else { return fail(ThzStatus::Null, "sweep is null") };
        let Some(r) = s.rows.get(index) else {
            return fail(ThzStatus::Range, format!("row {index} out of range (len {})", s.rows.len()));
        };
        let row = ThzRow {
            sweep_value: r.sweep_value.unwrap_or(f64::NAN),
            estimate: r.estimate.unwrap_or(f64::NAN),
            std_error: r.stderr.unwrap_or(f64::NAN),
            user: match r.user {
                thz_noma::channel::User::Near => 1,
                thz_noma::channel::User::Far => 2,
            },
            mode: match r.mode {
                thz_noma::channel::Access::Noma => 1,
                thz_noma::channel::Access::Oma => 2,
            },
            ok: u32::from(r.is_ok()),
        };
        write_out(out, row)
    })
}

/// Writes row `index` as "scheme,method,status" into `buf`. `needed`
/// receives the size including the NUL; `Range` is returned if it does
/// not fit.
///
/// # Safety
/// `sweep` must be null or a live handle; `buf` must be null or valid for
/// `len` bytes; `needed` must be null or writable.
#[no_mangle]
pub unsafe extern "C" fn thz_sweep_row_labels(
    sweep: *const ThzSweep,
    index: usize,
    buf: *mut c_char,
    len: usize,
    needed: *mut usize,
) -> ThzStatus {
    guard(|| {
        let Some(s) = sweep.as_ref() else { return fail(ThzStatus::Null, "sweep is null") };
        let Some(r) = s.rows.get(index) else {
            return fail(ThzStatus::Range, format!("row {index} out of range (len {})", s.rows.len()));
        };
        let text = format!("{},{},{}", r.scheme, r.method.as_str(), r.status);
        fill(text.as_bytes(), buf, len, needed)
    })
}

unsafe fn fill(text: &[u8], buf: *mut c_char, len: usize, needed: *mut usize) -> ThzStatus {
    let need = copy_out(text, buf, len);
    if !needed.is_null() {
        needed.write(need);
    }
    if buf.is_null() || len < need {
        return fail(ThzStatus::Range, format!("buffer of {len} bytes too small, {need} needed"));
    }
    ThzStatus::Ok
}

/// Renders the rows as CSV (with header) into `buf`. Same sizing protocol
/// as [`thz_sweep_row_labels`].
///
/// # Safety
/// As for [`thz_sweep_row_labels`].
#[no_mangle]
pub unsafe extern "C" fn thz_sweep_csv(
    sweep: *const ThzSweep,
    buf: *mut c_char,
    len: usize,
    needed: *mut usize,
) -> ThzStatus {
    guard(|| {
        let Some(s) = sweep.as_ref() else { return fail(ThzStatus::Null, "sweep is null") };
        match csv_string(&s.rows) {
            Ok(text) => fill(text.as_bytes(), buf, len, needed),
            Err(e) => fail(scenario_status(&e), e),
        }
    })
}

/// # Safety
/// `sweep` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn thz_sweep_free(sweep: *mut ThzSweep) {
    if !sweep.is_null() {
        drop(Box::from_raw(sweep));
    }
}
