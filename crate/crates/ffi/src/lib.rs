//! C ABI surface for the simulation and certification engine.
//!
//! Conventions:
//! * Every function returns an error code (`QKD_OK` = 0) or a pointer that is
//!   null on failure; `qkd_last_error_message` retrieves a description of the
//!   most recent failure on the calling thread.
//! * Handles (`QkdConfig`, `QkdScan`) are opaque and must be released with
//!   the matching `*_free` function exactly once.
//! * Strings passed in are NUL-terminated UTF-8; strings returned are owned
//!   by the library until the originating handle is freed.

use std::cell::RefCell;
use std::ffi::{c_char, c_double, c_int, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use chsh_mdi_qkd::cli::{parse_config, RunConfig};
use chsh_mdi_qkd::keyrate::{distance_scan, BoundSource, ScanResult};

/// Success.
pub const QKD_OK: c_int = 0;
/// A pointer argument was null or otherwise unusable.
pub const QKD_ERR_NULL_ARGUMENT: c_int = 1;
/// The configuration text failed to parse or validate.
pub const QKD_ERR_INVALID_CONFIG: c_int = 2;
/// The scan computation failed.
pub const QKD_ERR_COMPUTE: c_int = 3;
/// An index was out of range.
pub const QKD_ERR_OUT_OF_RANGE: c_int = 4;
/// The library panicked internally; the handle state is unchanged.
pub const QKD_ERR_INTERNAL: c_int = 5;

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(message: impl Into<String>) {
    let owned = message.into().replace('\0', " ");
    LAST_ERROR.with(|slot| {
        *slot.borrow_mut() = CString::new(owned).unwrap_or_default();
    });
}

fn guard<T>(fallback: T, body: impl FnOnce() -> T) -> T {
    match catch_unwind(AssertUnwindSafe(body)) {
        Ok(value) => value,
        Err(_) => {
            set_error("internal panic");
            fallback
        }
    }
}

/// Opaque parsed run configuration.
pub struct QkdConfig {
    inner: RunConfig,
}

/// Opaque distance-scan result.
pub struct QkdScan {
    inner: ScanResult,
    csv: CString,
}

/// Returns a pointer to a NUL-terminated description of the most recent
/// error on this thread. Valid until the next failing call on this thread.
#[no_mangle]
pub extern "C" fn qkd_last_error_message() -> *const c_char {
    LAST_ERROR.with(|slot| slot.borrow().as_ptr())
}

/// Parses a key=value configuration document into a new handle.
/// Returns null on failure; the handle must be released with
/// `qkd_config_free`.
#[no_mangle]
pub extern "C" fn qkd_config_parse(text: *const c_char) -> *mut QkdConfig {
    guard(ptr::null_mut(), || {
        if text.is_null() {
            set_error("qkd_config_parse: text is null");
            return ptr::null_mut();
        }
        let text = match unsafe { CStr::from_ptr(text) }.to_str() {
            Ok(t) => t,
            Err(_) => {
                set_error("qkd_config_parse: text is not valid UTF-8");
                return ptr::null_mut();
            }
        };
        match parse_config(text) {
            Ok(inner) => Box::into_raw(Box::new(QkdConfig { inner })),
            Err(e) => {
                set_error(e.to_string());
                ptr::null_mut()
            }
        }
    })
}

/// Releases a configuration handle. Passing null is a no-op.
#[no_mangle]
pub extern "C" fn qkd_config_free(config: *mut QkdConfig) {
    if !config.is_null() {
        drop(unsafe { Box::from_raw(config) });
    }
}

/// Runs the distance scan described by `config`. On success writes a new
/// scan handle to `out_scan` and returns `QKD_OK`; the handle must be
/// released with `qkd_scan_free`.
#[no_mangle]
pub extern "C" fn qkd_scan_run(config: *const QkdConfig, out_scan: *mut *mut QkdScan) -> c_int {
    guard(QKD_ERR_INTERNAL, || {
        if config.is_null() || out_scan.is_null() {
            set_error("qkd_scan_run: null argument");
            return QKD_ERR_NULL_ARGUMENT;
        }
        let config = unsafe { &(*config).inner };
        let proto = match config.protocol_config() {
            Ok(p) => p,
            Err(e) => {
                set_error(e.to_string());
                return QKD_ERR_INVALID_CONFIG;
            }
        };
        let result = distance_scan(
            &proto,
            config.protocol,
            BoundSource::DecoyLp,
            &config.distance_list(),
            config.pulses,
            config.signal_grid,
        );
        match result {
            Ok(inner) => {
                let csv = CString::new(inner.to_csv()).unwrap_or_default();
                unsafe { *out_scan = Box::into_raw(Box::new(QkdScan { inner, csv })) };
                QKD_OK
            }
            Err(e) => {
                set_error(e.to_string());
                QKD_ERR_COMPUTE
            }
        }
    })
}

/// Releases a scan handle. Passing null is a no-op.
#[no_mangle]
pub extern "C" fn qkd_scan_free(scan: *mut QkdScan) {
    if !scan.is_null() {
        drop(unsafe { Box::from_raw(scan) });
    }
}

/// Number of distance points in the scan.
#[no_mangle]
pub extern "C" fn qkd_scan_len(scan: *const QkdScan) -> c_int {
    guard(-1, || {
        if scan.is_null() {
            set_error("qkd_scan_len: scan is null");
            return -1;
        }
        unsafe { &*scan }.inner.points.len() as c_int
    })
}

/// Copies (distance_km, certified key rate per pulse pair) for point `index`
/// into the out parameters. Returns `QKD_OK` on success.
#[no_mangle]
pub extern "C" fn qkd_scan_point(
    scan: *const QkdScan,
    index: c_int,
    out_distance_km: *mut c_double,
    out_rate: *mut c_double,
) -> c_int {
    guard(QKD_ERR_INTERNAL, || {
        if scan.is_null() || out_distance_km.is_null() || out_rate.is_null() {
            set_error("qkd_scan_point: null argument");
            return QKD_ERR_NULL_ARGUMENT;
        }
        let points = &unsafe { &*scan }.inner.points;
        if index < 0 || index as usize >= points.len() {
            set_error(format!(
                "qkd_scan_point: index {index} out of range (len {})",
                points.len()
            ));
            return QKD_ERR_OUT_OF_RANGE;
        }
        let point = &points[index as usize];
        unsafe {
            *out_distance_km = point.distance_km;
            *out_rate = point.rate;
        }
        QKD_OK
    })
}

/// Largest scanned distance with a strictly positive certified rate, or a
/// negative value if no point is secure. Returns NaN on error.
#[no_mangle]
pub extern "C" fn qkd_scan_secure_distance_km(scan: *const QkdScan) -> c_double {
    guard(f64::NAN, || {
        if scan.is_null() {
            set_error("qkd_scan_secure_distance_km: scan is null");
            return f64::NAN;
        }
        unsafe { &*scan }.inner.secure_distance().unwrap_or(-1.0)
    })
}

/// The full scan as a NUL-terminated CSV document, owned by the scan handle.
#[no_mangle]
pub extern "C" fn qkd_scan_csv(scan: *const QkdScan) -> *const c_char {
    guard(ptr::null(), || {
        if scan.is_null() {
            set_error("qkd_scan_csv: scan is null");
            return ptr::null();
        }
        unsafe { &*scan }.csv.as_ptr()
    })
}
