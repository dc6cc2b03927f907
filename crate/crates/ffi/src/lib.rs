//! C ABI over `ddlink-core`.
//!
//! Configs and sweep results are opaque heap handles released with their
//! `*_free` function. Every fallible call returns a [`DdlStatus`]; on failure
//! the message is available from [`ddl_last_error`] on the same thread.
//! Strings handed out by the library are released with [`ddl_string_free`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use ddlink_core::cli::hm_rows;
use ddlink_core::equalizer::{hm_snr, HmOmega};
use ddlink_core::simkit::{run_sweep, SweepSummary};
use ddlink_core::{Error, SystemConfig};

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DdlStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    Config = 3,
    Numeric = 4,
    Io = 5,
    Panic = 6,
}

/// Opaque simulator configuration.
pub struct DdlConfig(SystemConfig);

/// Opaque sweep result.
pub struct DdlSweep {
    summary: SweepSummary,
    r_th: f64,
}

/// One sweep point. Statistics absent under the configured channel mode are NaN.
#[repr(C)]
#[derive(Debug, Clone, Copy, Default)]
pub struct DdlSweepPoint {
    pub rho_t_db: f64,
    pub p0: f64,
    pub trials: usize,
    pub se_hm_real_mean: f64,
    pub se_hm_real_stderr: f64,
    pub se_hm_ideal_mean: f64,
    pub se_hm_ideal_stderr: f64,
    pub gap_mean: f64,
    pub gap_stderr: f64,
    pub se_hm_at_lm_mean: f64,
    pub se_hm_at_lm_min: f64,
    pub se_lm_mean: f64,
    pub se_lm_min: f64,
    pub se_lm_worst: f64,
    /// Outage at the config's `R_th`.
    pub outage_real: f64,
    pub outage_ideal: f64,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn fail(status: DdlStatus, msg: impl Into<String>) -> DdlStatus {
    set_error(msg.into());
    status
}

fn status_of(err: &Error) -> DdlStatus {
    match err {
        Error::Parse(_) | Error::Validation { .. } => DdlStatus::Config,
        Error::InvalidArgument(_) | Error::DimensionMismatch { .. } | Error::EmptySamples => DdlStatus::InvalidArgument,
        Error::Io(_) | Error::Csv(_) => DdlStatus::Io,
        _ => DdlStatus::Numeric,
    }
}

fn guard(f: impl FnOnce() -> Result<(), DdlStatus>) -> DdlStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => DdlStatus::Ok,
        Ok(Err(s)) => s,
        Err(_) => fail(DdlStatus::Panic, "internal panic"),
    }
}

fn core(err: Error) -> DdlStatus {
    fail(status_of(&err), err.to_string())
}

unsafe fn out_ref<'a, T>(p: *mut T) -> Result<&'a mut T, DdlStatus> {
    p.as_mut().ok_or_else(|| fail(DdlStatus::NullPointer, "output pointer is null"))
}

unsafe fn in_ref<'a, T>(p: *const T) -> Result<&'a T, DdlStatus> {
    p.as_ref().ok_or_else(|| fail(DdlStatus::NullPointer, "input pointer is null"))
}

fn into_c_string(s: String) -> Result<*mut c_char, DdlStatus> {
    CString::new(s)
        .map(CString::into_raw)
        .map_err(|_| fail(DdlStatus::InvalidArgument, "string contains NUL"))
}

/// Message of the last failed call on this thread, or NULL. Valid until the
/// next failing call on the same thread.
#[no_mangle]
pub extern "C" fn ddl_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Static version string.
#[no_mangle]
pub extern "C" fn ddl_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// # Safety
/// `s` must be NULL or a string returned by this library, freed at most once.
#[no_mangle]
pub unsafe extern "C" fn ddl_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// # Safety
/// `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn ddl_config_default(out: *mut *mut DdlConfig) -> DdlStatus {
    guard(|| {
        let out = out_ref(out)?;
        *out = Box::into_raw(Box::new(DdlConfig(SystemConfig::default())));
        Ok(())
    })
}

/// Parses and validates a JSON config document.
///
/// # Safety
/// `json` must be a NUL-terminated string and `out` valid for writes.
#[no_mangle]
pub unsafe extern "C" fn ddl_config_from_json(json: *const c_char, out: *mut *mut DdlConfig) -> DdlStatus {
    guard(|| {
        let out = out_ref(out)?;
        if json.is_null() {
            return Err(fail(DdlStatus::NullPointer, "json is null"));
        }
        let text = CStr::from_ptr(json)
            .to_str()
            .map_err(|_| fail(DdlStatus::InvalidArgument, "json is not UTF-8"))?;
        let cfg = SystemConfig::from_json_str(text).map_err(core)?;
        cfg.validate().map_err(core)?;
        *out = Box::into_raw(Box::new(DdlConfig(cfg)));
        Ok(())
    })
}

/// Resolved config as pretty JSON; free with `ddl_string_free`.
///
/// # Safety
/// `cfg` must be a live handle and `out` valid for writes.
#[no_mangle]
pub unsafe extern "C" fn ddl_config_to_json(cfg: *const DdlConfig, out: *mut *mut c_char) -> DdlStatus {
    guard(|| {
        let cfg = in_ref(cfg)?;
        let out = out_ref(out)?;
        *out = into_c_string(cfg.0.to_json_pretty())?;
        Ok(())
    })
}

/// # Safety
/// `cfg` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn ddl_config_set_trials(cfg: *mut DdlConfig, trials: usize) -> DdlStatus {
    guard(|| {
        let cfg = out_ref(cfg)?;
        let mut next = cfg.0.clone();
        next.trials = trials;
        next.validate().map_err(core)?;
        cfg.0 = next;
        Ok(())
    })
}

/// # Safety
/// `cfg` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn ddl_config_set_seed(cfg: *mut DdlConfig, seed: u64) -> DdlStatus {
    guard(|| {
        out_ref(cfg)?.0.master_seed = seed;
        Ok(())
    })
}

/// # Safety
/// `cfg` must be NULL or a handle from this library, freed at most once.
#[no_mangle]
pub unsafe extern "C" fn ddl_config_free(cfg: *mut DdlConfig) {
    if !cfg.is_null() {
        drop(Box::from_raw(cfg));
    }
}

/// Runs a sweep over `p0_values` and the config's SNR grid. Results do not
/// depend on `workers`.
///
/// # Safety
/// `cfg` must be a live handle, `p0_values` must point to `n_p0` doubles and
/// `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn ddl_run_sweep(
    cfg: *const DdlConfig,
    p0_values: *const f64,
    n_p0: usize,
    workers: usize,
    out: *mut *mut DdlSweep,
) -> DdlStatus {
    guard(|| {
        let cfg = in_ref(cfg)?;
        let out = out_ref(out)?;
        if p0_values.is_null() {
            return Err(fail(DdlStatus::NullPointer, "p0_values is null"));
        }
        let p0 = std::slice::from_raw_parts(p0_values, n_p0);
        let summary = run_sweep(&cfg.0, p0, workers).map_err(core)?;
        *out = Box::into_raw(Box::new(DdlSweep {
            summary,
            r_th: cfg.0.r_th,
        }));
        Ok(())
    })
}

/// # Safety
/// `sweep` must be a live handle and `out` valid for writes.
#[no_mangle]
pub unsafe extern "C" fn ddl_sweep_len(sweep: *const DdlSweep, out: *mut usize) -> DdlStatus {
    guard(|| {
        *out_ref(out)? = in_ref(sweep)?.summary.points.len();
        Ok(())
    })
}

/// # Safety
/// `sweep` must be a live handle and `out` valid for writes.
#[no_mangle]
pub unsafe extern "C" fn ddl_sweep_point(sweep: *const DdlSweep, index: usize, out: *mut DdlSweepPoint) -> DdlStatus {
    guard(|| {
        let sweep = in_ref(sweep)?;
        let out = out_ref(out)?;
        let p = sweep.summary.points.get(index).ok_or_else(|| {
            fail(
                DdlStatus::InvalidArgument,
                format!("index {index} out of range for {} points", sweep.summary.points.len()),
            )
        })?;
        let mean = |s: Option<ddlink_core::simkit::Stat>| s.map_or(f64::NAN, |s| s.mean);
        let se = |s: Option<ddlink_core::simkit::Stat>| s.map_or(f64::NAN, |s| s.stderr);
        let outage = p.outage_at(sweep.r_th);
        *out = DdlSweepPoint {
            rho_t_db: p.rho_t_db,
            p0: p.p0,
            trials: p.trials,
            se_hm_real_mean: mean(p.se_hm_real),
            se_hm_real_stderr: se(p.se_hm_real),
            se_hm_ideal_mean: mean(p.se_hm_ideal),
            se_hm_ideal_stderr: se(p.se_hm_ideal),
            gap_mean: mean(p.gap),
            gap_stderr: se(p.gap),
            se_hm_at_lm_mean: p.se_hm_at_lm_mean.mean,
            se_hm_at_lm_min: p.se_hm_at_lm_min.mean,
            se_lm_mean: p.se_lm_mean.mean,
            se_lm_min: p.se_lm_min.mean,
            se_lm_worst: p.se_lm_worst.mean,
            outage_real: outage.and_then(|o| o.real).unwrap_or(f64::NAN),
            outage_ideal: outage.and_then(|o| o.ideal).unwrap_or(f64::NAN),
        };
        Ok(())
    })
}

/// HM sweep rows in the `hm-sweep` CSV schema; free with `ddl_string_free`.
///
/// # Safety
/// `sweep` must be a live handle and `out` valid for writes.
#[no_mangle]
pub unsafe extern "C" fn ddl_sweep_hm_csv(sweep: *const DdlSweep, out: *mut *mut c_char) -> DdlStatus {
    guard(|| {
        let sweep = in_ref(sweep)?;
        let out = out_ref(out)?;
        let mut text = ddlink_core::cli::HM_COLUMNS.join(",");
        text.push('\n');
        for row in hm_rows(&sweep.summary) {
            text.push_str(&row.join(","));
            text.push('\n');
        }
        *out = into_c_string(text)?;
        Ok(())
    })
}

/// # Safety
/// `sweep` must be NULL or a handle from this library, freed at most once.
#[no_mangle]
pub unsafe extern "C" fn ddl_sweep_free(sweep: *mut DdlSweep) {
    if !sweep.is_null() {
        drop(Box::from_raw(sweep));
    }
}

/// Leakage coefficient of Doppler offset `q` for fractional Doppler `kappa`
/// on an `n`-bin Doppler axis.
///
/// # Safety
/// `re` and `im` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn ddl_subpath_ratio(q: i64, kappa: f64, n: usize, re: *mut f64, im: *mut f64) -> DdlStatus {
    guard(|| {
        if n == 0 || !kappa.is_finite() {
            return Err(fail(DdlStatus::InvalidArgument, "n must be positive and kappa finite"));
        }
        let (re, im) = (out_ref(re)?, out_ref(im)?);
        let z = ddlink_core::channel::subpath_ratio(q, kappa, n);
        (*re, *im) = (z.re, z.im);
        Ok(())
    })
}

/// HM detection SNR from the spectrum averages.
///
/// # Safety
/// `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn ddl_hm_snr(
    omega_e: f64,
    omega_f: f64,
    omega_0: f64,
    p0: f64,
    rho_t: f64,
    out: *mut f64,
) -> DdlStatus {
    guard(|| {
        let out = out_ref(out)?;
        let omega = HmOmega {
            omega_e,
            omega_f,
            omega_0,
        };
        *out = hm_snr(&omega, p0, rho_t).map_err(core)?;
        Ok(())
    })
}

/// `log2(1 + gamma)`.
#[no_mangle]
pub extern "C" fn ddl_spectral_efficiency(gamma: f64) -> f64 {
    ddlink_core::noma::spectral_efficiency(gamma)
}
