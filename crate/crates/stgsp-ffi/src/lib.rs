//! C ABI for the stgsp feature-extraction library.
//!
//! Conventions:
//! * Handles (`StgspConfig`, `StgspSignal`, `StgspFeatures`) are opaque;
//!   create them through the constructors and release them with the matching
//!   `*_free` function. Freeing a null pointer is a no-op.
//! * Fallible functions return an [`StgspStatus`]; on failure a thread-local
//!   message is available via [`stgsp_last_error_message`].
//! * Strings are NUL-terminated UTF-8. Pointers returned by accessor
//!   functions borrow from their handle and die with it.
//!
//! The C header is generated by cbindgen at build time into
//! `include/stgsp.h`.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::PathBuf;

use stgsp::pipeline::{extract_features, FeatureVector, PipelineConfig};
use stgsp::signal::SpatiotemporalSignal;
use stgsp::Error;

/// Result codes of every fallible entry point.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StgspStatus {
    Ok = 0,
    NullArgument = 1,
    InvalidUtf8 = 2,
    IoError = 3,
    FormatError = 4,
    InvalidValue = 5,
    SizeCapExceeded = 6,
    DimensionMismatch = 7,
    ConvergenceFailed = 8,
    Overflow = 9,
    NonFiniteOutput = 10,
    ExtractionFailed = 11,
    InternalPanic = 12,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_last_error(message: &str) {
    let sanitized: String = message.chars().filter(|&c| c != '\0').collect();
    LAST_ERROR.with(|slot| {
        *slot.borrow_mut() = CString::new(sanitized).expect("NUL stripped above");
    });
}

fn status_of(err: &Error) -> StgspStatus {
    match err {
        Error::Io { .. } => StgspStatus::IoError,
        Error::Format(_) => StgspStatus::FormatError,
        Error::Value(_) => StgspStatus::InvalidValue,
        Error::Size(_) => StgspStatus::SizeCapExceeded,
        Error::Dimension(_) => StgspStatus::DimensionMismatch,
        Error::Convergence(_) => StgspStatus::ConvergenceFailed,
        Error::Overflow(_) => StgspStatus::Overflow,
        Error::NonFinite(_) => StgspStatus::NonFiniteOutput,
        Error::BatchFailed { .. } => StgspStatus::ExtractionFailed,
    }
}

fn fail(err: &Error) -> StgspStatus {
    set_last_error(&err.to_string());
    status_of(err)
}

fn guard(body: impl FnOnce() -> StgspStatus) -> StgspStatus {
    match catch_unwind(AssertUnwindSafe(body)) {
        Ok(status) => status,
        Err(panic) => {
            let msg = panic
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| panic.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_else(|| "panic across FFI boundary".to_string());
            set_last_error(&msg);
            StgspStatus::InternalPanic
        }
    }
}

/// # Safety
/// `ptr` must be a valid NUL-terminated string.
unsafe fn path_arg(ptr: *const c_char) -> Result<PathBuf, StgspStatus> {
    if ptr.is_null() {
        set_last_error("path is null");
        return Err(StgspStatus::NullArgument);
    }
    match unsafe { CStr::from_ptr(ptr) }.to_str() {
        Ok(s) => Ok(PathBuf::from(s)),
        Err(_) => {
            set_last_error("path is not valid UTF-8");
            Err(StgspStatus::InvalidUtf8)
        }
    }
}

/// Copies the last error message of this thread into `buffer` (truncated to
/// `length - 1` bytes, always NUL-terminated) and returns the full message
/// length in bytes. With a null buffer, just returns the needed length.
#[no_mangle]
pub unsafe extern "C" fn stgsp_last_error_message(buffer: *mut c_char, length: usize) -> usize {
    LAST_ERROR.with(|slot| {
        let msg = slot.borrow();
        let bytes = msg.as_bytes();
        if !buffer.is_null() && length > 0 {
            let n = bytes.len().min(length - 1);
            unsafe {
                std::ptr::copy_nonoverlapping(bytes.as_ptr().cast::<c_char>(), buffer, n);
                *buffer.add(n) = 0;
            }
        }
        bytes.len()
    })
}

/// Opaque pipeline configuration handle.
pub struct StgspConfig {
    inner: PipelineConfig,
}

/// Allocates a configuration with the library defaults.
#[no_mangle]
pub extern "C" fn stgsp_config_default() -> *mut StgspConfig {
    Box::into_raw(Box::new(StgspConfig {
        inner: PipelineConfig::default(),
    }))
}

/// Loads a configuration from a TOML key-value file.
///
/// # Safety
/// `path` must be NUL-terminated; `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn stgsp_config_from_file(
    path: *const c_char,
    out: *mut *mut StgspConfig,
) -> StgspStatus {
    guard(|| {
        if out.is_null() {
            set_last_error("out is null");
            return StgspStatus::NullArgument;
        }
        let path = match unsafe { path_arg(path) } {
            Ok(p) => p,
            Err(status) => return status,
        };
        match PipelineConfig::from_toml_file(&path) {
            Ok(cfg) => {
                unsafe { *out = Box::into_raw(Box::new(StgspConfig { inner: cfg })) };
                StgspStatus::Ok
            }
            Err(e) => fail(&e),
        }
    })
}

/// Releases a configuration handle.
///
/// # Safety
/// `config` must come from this library and not be freed twice.
#[no_mangle]
pub unsafe extern "C" fn stgsp_config_free(config: *mut StgspConfig) {
    if !config.is_null() {
        drop(unsafe { Box::from_raw(config) });
    }
}

/// Opaque signal handle.
pub struct StgspSignal {
    inner: SpatiotemporalSignal,
}

/// Builds a signal from a row-major `channels x samples` buffer (each
/// channel's samples contiguous).
///
/// # Safety
/// `data` must point to `channels * samples` doubles; `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn stgsp_signal_from_data(
    data: *const f64,
    channels: usize,
    samples: usize,
    sample_rate_hz: f64,
    out: *mut *mut StgspSignal,
) -> StgspStatus {
    guard(|| {
        if data.is_null() || out.is_null() {
            set_last_error("data or out is null");
            return StgspStatus::NullArgument;
        }
        let len = match channels.checked_mul(samples) {
            Some(l) => l,
            None => {
                set_last_error("channels * samples overflows");
                return StgspStatus::Overflow;
            }
        };
        let values = unsafe { std::slice::from_raw_parts(data, len) }.to_vec();
        let matrix = match ndarray::Array2::from_shape_vec((channels, samples), values) {
            Ok(m) => m,
            Err(e) => {
                set_last_error(&e.to_string());
                return StgspStatus::InvalidValue;
            }
        };
        match SpatiotemporalSignal::new(matrix, sample_rate_hz) {
            Ok(sig) => {
                unsafe { *out = Box::into_raw(Box::new(StgspSignal { inner: sig })) };
                StgspStatus::Ok
            }
            Err(e) => fail(&e),
        }
    })
}

/// Reads a signal from a CSV file (rows = channels).
///
/// # Safety
/// `path` must be NUL-terminated; `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn stgsp_signal_from_csv(
    path: *const c_char,
    sample_rate_hz: f64,
    out: *mut *mut StgspSignal,
) -> StgspStatus {
    guard(|| {
        if out.is_null() {
            set_last_error("out is null");
            return StgspStatus::NullArgument;
        }
        let path = match unsafe { path_arg(path) } {
            Ok(p) => p,
            Err(status) => return status,
        };
        match SpatiotemporalSignal::from_csv(&path, sample_rate_hz) {
            Ok(sig) => {
                unsafe { *out = Box::into_raw(Box::new(StgspSignal { inner: sig })) };
                StgspStatus::Ok
            }
            Err(e) => fail(&e),
        }
    })
}

/// Reports a signal's channel and sample counts.
///
/// # Safety
/// All pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn stgsp_signal_shape(
    signal: *const StgspSignal,
    channels: *mut usize,
    samples: *mut usize,
) -> StgspStatus {
    if signal.is_null() || channels.is_null() || samples.is_null() {
        set_last_error("null argument");
        return StgspStatus::NullArgument;
    }
    let signal = unsafe { &*signal };
    unsafe {
        *channels = signal.inner.channels();
        *samples = signal.inner.samples();
    }
    StgspStatus::Ok
}

/// Releases a signal handle.
///
/// # Safety
/// `signal` must come from this library and not be freed twice.
#[no_mangle]
pub unsafe extern "C" fn stgsp_signal_free(signal: *mut StgspSignal) {
    if !signal.is_null() {
        drop(unsafe { Box::from_raw(signal) });
    }
}

/// Opaque feature-vector handle.
pub struct StgspFeatures {
    values: Vec<f64>,
    names: Vec<CString>,
}

impl StgspFeatures {
    fn from_vector(fv: FeatureVector) -> Self {
        let names = fv
            .names()
            .iter()
            .map(|n| CString::new(n.as_str()).expect("feature names contain no NUL"))
            .collect();
        Self {
            values: fv.values().to_vec(),
            names,
        }
    }
}

/// Runs the full hierarchical extraction on one signal.
///
/// # Safety
/// `signal` and `config` must be live handles; `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn stgsp_extract_features(
    signal: *const StgspSignal,
    config: *const StgspConfig,
    out: *mut *mut StgspFeatures,
) -> StgspStatus {
    guard(|| {
        if signal.is_null() || config.is_null() || out.is_null() {
            set_last_error("null argument");
            return StgspStatus::NullArgument;
        }
        let signal = unsafe { &*signal };
        let config = unsafe { &*config };
        match extract_features(&signal.inner, &config.inner) {
            Ok(fv) => {
                unsafe {
                    *out = Box::into_raw(Box::new(StgspFeatures::from_vector(fv)));
                }
                StgspStatus::Ok
            }
            Err(e) => fail(&e),
        }
    })
}

/// Number of features in the vector; 0 for a null handle.
///
/// # Safety
/// `features` must be a live handle or null.
#[no_mangle]
pub unsafe extern "C" fn stgsp_features_len(features: *const StgspFeatures) -> usize {
    if features.is_null() {
        return 0;
    }
    unsafe { &*features }.values.len()
}

/// Copies feature values into `buffer` (`length` doubles; must be at least
/// the vector length).
///
/// # Safety
/// `buffer` must point to at least `length` doubles.
#[no_mangle]
pub unsafe extern "C" fn stgsp_features_values(
    features: *const StgspFeatures,
    buffer: *mut f64,
    length: usize,
) -> StgspStatus {
    if features.is_null() || buffer.is_null() {
        set_last_error("null argument");
        return StgspStatus::NullArgument;
    }
    let features = unsafe { &*features };
    if length < features.values.len() {
        set_last_error(&format!(
            "buffer holds {length} values, need {}",
            features.values.len()
        ));
        return StgspStatus::DimensionMismatch;
    }
    unsafe {
        std::ptr::copy_nonoverlapping(features.values.as_ptr(), buffer, features.values.len());
    }
    StgspStatus::Ok
}

/// Name of feature `index`, or null when out of range. The pointer borrows
/// from the handle.
///
/// # Safety
/// `features` must be a live handle or null.
#[no_mangle]
pub unsafe extern "C" fn stgsp_features_name(
    features: *const StgspFeatures,
    index: usize,
) -> *const c_char {
    if features.is_null() {
        return std::ptr::null();
    }
    let features = unsafe { &*features };
    features
        .names
        .get(index)
        .map_or(std::ptr::null(), |n| n.as_ptr())
}

/// Releases a feature-vector handle.
///
/// # Safety
/// `features` must come from this library and not be freed twice.
#[no_mangle]
pub unsafe extern "C" fn stgsp_features_free(features: *mut StgspFeatures) {
    if !features.is_null() {
        drop(unsafe { Box::from_raw(features) });
    }
}

/// Area under the ROC curve of binary labels (0/1) against scores, ties
/// half-credited.
///
/// # Safety
/// `scores` and `labels` must hold `length` elements; `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn stgsp_auc(
    scores: *const f64,
    labels: *const u8,
    length: usize,
    out: *mut f64,
) -> StgspStatus {
    guard(|| {
        if scores.is_null() || labels.is_null() || out.is_null() {
            set_last_error("null argument");
            return StgspStatus::NullArgument;
        }
        let scores = unsafe { std::slice::from_raw_parts(scores, length) };
        let labels = unsafe { std::slice::from_raw_parts(labels, length) };
        match stgsp::eval::auc(scores, labels) {
            Ok(v) => {
                unsafe { *out = v };
                StgspStatus::Ok
            }
            Err(e) => fail(&e),
        }
    })
}

/// Bytes a dense `(S*T) x (S*T)` adjacency would need at `bytes_per_entry`
/// per entry.
///
/// # Safety
/// `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn stgsp_estimate_dense_bytes(
    channels: usize,
    samples: usize,
    bytes_per_entry: usize,
    out: *mut u64,
) -> StgspStatus {
    if out.is_null() {
        set_last_error("out is null");
        return StgspStatus::NullArgument;
    }
    match stgsp::graph::estimate_dense_bytes(channels, samples, bytes_per_entry) {
        Ok(v) => {
            unsafe { *out = v };
            StgspStatus::Ok
        }
        Err(e) => fail(&e),
    }
}

/// Library version as a static string.
#[no_mangle]
pub extern "C" fn stgsp_version() -> *const c_char {
    static VERSION: &str = concat!(env!("CARGO_PKG_VERSION"), "\0");
    VERSION.as_ptr().cast()
}
