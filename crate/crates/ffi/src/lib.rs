//! C ABI for `fracspec`.
//!
//! Conventions:
//! - every fallible function returns an [`FsStatus`]; on failure the thread's
//!   last error message is available from [`fs_last_error_message`];
//! - objects are opaque handles created by `fs_*_new`/`fs_*_load`/analysis
//!   functions and released with the matching `fs_*_free`;
//! - output arrays are caller-allocated; functions taking `cap` write at most
//!   `cap` values and report the required length through `len_out`.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::ptr;

use fracspec::estimator::{self, EstimatorConfig, PowerLawFit, RollingTrack};
use fracspec::ingest::{self, CsvSchema, LogPriceSeries};
use fracspec::segment::{self, Partition, SearchConfig};
use fracspec::spectrum::{self, InertialRange};
use fracspec::synth::{self, FbmSpec};
use fracspec::{regularize, Error};

/// Result codes.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FsStatus {
    Ok = 0,
    NullPointer = 1,
    /// A parameter violates a precondition.
    InvalidArgument = 2,
    /// Input data rejected (malformed, non-positive, degenerate).
    InvalidData = 3,
    Io = 4,
    /// Output buffer smaller than required; see `len_out`.
    BufferTooSmall = 5,
    /// Internal panic caught at the boundary.
    Internal = 6,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).expect("no interior nul");
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn status_of(e: &Error) -> FsStatus {
    match e {
        Error::Io { .. } => FsStatus::Io,
        Error::InvalidParameter { .. }
        | Error::ScaleOutOfRange { .. }
        | Error::InvalidRange { .. }
        | Error::InvalidMomentOrder(_)
        | Error::WindowExceedsSeries { .. }
        | Error::InfeasibleSegmentation(_)
        | Error::SegmentTooShort { .. }
        | Error::SeriesTooLong { .. }
        | Error::HurstOutOfRange { .. }
        | Error::VolatilityOutOfRange { .. } => FsStatus::InvalidArgument,
        _ => FsStatus::InvalidData,
    }
}

fn fail(e: Error) -> FsStatus {
    set_error(format!("{}: {}", e.class(), e));
    status_of(&e)
}

fn null(what: &str) -> FsStatus {
    set_error(format!("NullPointer: {what} is null"));
    FsStatus::NullPointer
}

/// Runs `f` and converts panics into [`FsStatus::Internal`].
fn guard(f: impl FnOnce() -> FsStatus) -> FsStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(s) => s,
        Err(p) => {
            let msg = p
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| p.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "unknown panic".into());
            set_error(format!("Internal: {msg}"));
            FsStatus::Internal
        }
    }
}

unsafe fn slice<'a>(p: *const f64, n: usize) -> Option<&'a [f64]> {
    if n == 0 {
        return Some(&[]);
    }
    if p.is_null() {
        None
    } else {
        Some(std::slice::from_raw_parts(p, n))
    }
}

unsafe fn put<T>(out: *mut *mut T, value: T) {
    *out = Box::into_raw(Box::new(value));
}

unsafe fn write_array(values: &[f64], out: *mut f64, cap: usize, len_out: *mut usize) -> FsStatus {
    if !len_out.is_null() {
        *len_out = values.len();
    }
    if values.len() > cap {
        set_error(format!(
            "BufferTooSmall: need {} values, got {cap}",
            values.len()
        ));
        return FsStatus::BufferTooSmall;
    }
    if values.is_empty() {
        return FsStatus::Ok;
    }
    if out.is_null() {
        return null("out");
    }
    ptr::copy_nonoverlapping(values.as_ptr(), out, values.len());
    FsStatus::Ok
}

/// Message of the last failure on this thread, or null. Valid until the next
/// failing call on the same thread.
#[no_mangle]
pub extern "C" fn fs_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Library version as a static nul-terminated string.
#[no_mangle]
pub extern "C" fn fs_version() -> *const c_char {
    static VERSION: &str = concat!(env!("CARGO_PKG_VERSION"), "\0");
    VERSION.as_ptr().cast()
}

/// Power-law parameters of one fit.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct FsFit {
    /// Hurst exponent clamped to [0.05, 0.95].
    pub hurst: f64,
    pub raw_hurst: f64,
    /// Volatility per sampling interval.
    pub volatility: f64,
    pub intercept: f64,
    pub slope: f64,
}

impl From<&PowerLawFit> for FsFit {
    fn from(f: &PowerLawFit) -> Self {
        Self {
            hurst: f.hurst,
            raw_hurst: f.raw_hurst,
            volatility: f.volatility,
            intercept: f.intercept,
            slope: f.slope,
        }
    }
}

/// Opaque log-price series.
pub struct FsSeries(LogPriceSeries);

/// Creates a series from `n` positive prices on consecutive days.
///
/// # Safety
/// `prices` must point to `n` readable values; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn fs_series_from_prices(
    prices: *const f64,
    n: usize,
    out: *mut *mut FsSeries,
) -> FsStatus {
    guard(|| {
        if out.is_null() {
            return null("out");
        }
        let Some(p) = slice(prices, n) else {
            return null("prices");
        };
        match ingest::PriceSeries::from_prices("ffi", p.to_vec()) {
            Ok(ps) => {
                put(out, FsSeries(ingest::to_log(&ps)));
                FsStatus::Ok
            }
            Err(e) => fail(e),
        }
    })
}

/// Creates a series from `n` log-prices.
///
/// # Safety
/// `values` must point to `n` readable values; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn fs_series_from_log(
    values: *const f64,
    n: usize,
    out: *mut *mut FsSeries,
) -> FsStatus {
    guard(|| {
        if out.is_null() {
            return null("out");
        }
        let Some(v) = slice(values, n) else {
            return null("values");
        };
        match LogPriceSeries::from_values("ffi", v.to_vec()) {
            Ok(s) => {
                put(out, FsSeries(s));
                FsStatus::Ok
            }
            Err(e) => fail(e),
        }
    })
}

/// Loads a `date,price` CSV.
///
/// # Safety
/// `path` must be a nul-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn fs_series_load_csv(
    path: *const c_char,
    out: *mut *mut FsSeries,
) -> FsStatus {
    guard(|| {
        if out.is_null() {
            return null("out");
        }
        if path.is_null() {
            return null("path");
        }
        let Ok(p) = CStr::from_ptr(path).to_str() else {
            set_error("InvalidParameter: path is not UTF-8".into());
            return FsStatus::InvalidArgument;
        };
        match ingest::load_csv(Path::new(p), &CsvSchema::default()) {
            Ok(ps) => {
                put(out, FsSeries(ingest::to_log(&ps)));
                FsStatus::Ok
            }
            Err(e) => fail(e),
        }
    })
}

/// Number of samples, 0 for a null handle.
///
/// # Safety
/// `s` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn fs_series_len(s: *const FsSeries) -> usize {
    s.as_ref().map_or(0, |s| s.0.len())
}

/// Copies the log-prices.
///
/// # Safety
/// `s` must be a live handle; `out` must hold `cap` values.
#[no_mangle]
pub unsafe extern "C" fn fs_series_values(
    s: *const FsSeries,
    out: *mut f64,
    cap: usize,
    len_out: *mut usize,
) -> FsStatus {
    guard(|| match s.as_ref() {
        None => null("series"),
        Some(s) => write_array(s.0.values(), out, cap, len_out),
    })
}

/// # Safety
/// `s` must be null or a handle not freed before.
#[no_mangle]
pub unsafe extern "C" fn fs_series_free(s: *mut FsSeries) {
    if !s.is_null() {
        drop(Box::from_raw(s));
    }
}

/// Gaussian-regularized copy of a series.
///
/// # Safety
/// `s` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn fs_series_gaussianize(
    s: *const FsSeries,
    out: *mut *mut FsSeries,
) -> FsStatus {
    guard(|| {
        if out.is_null() {
            return null("out");
        }
        let Some(s) = s.as_ref() else {
            return null("series");
        };
        match regularize::gaussianize_diffs(&s.0) {
            Ok(r) => {
                put(out, FsSeries(r.series));
                FsStatus::Ok
            }
            Err(e) => fail(e),
        }
    })
}

/// Model spectrum `s^2 h(H) (2j)^{2H+1}`.
#[no_mangle]
pub extern "C" fn fs_model_spectrum(hurst: f64, volatility: f64, j: usize) -> f64 {
    spectrum::model_spectrum(hurst, volatility, j)
}

/// Scale spectrum `S_first..S_last` of `n` values.
///
/// # Safety
/// `values` must hold `n` values and `out` `cap` values.
#[no_mangle]
pub unsafe extern "C" fn fs_scale_spectrum(
    values: *const f64,
    n: usize,
    first: usize,
    last: usize,
    out: *mut f64,
    cap: usize,
    len_out: *mut usize,
) -> FsStatus {
    guard(|| {
        let Some(v) = slice(values, n) else {
            return null("values");
        };
        let spec = InertialRange::new(first, last, n).and_then(|r| spectrum::scale_spectrum(v, r));
        match spec {
            Ok(s) => write_array(&s.values, out, cap, len_out),
            Err(e) => fail(e),
        }
    })
}

/// Robust power-law fit of a whole series over scales `2..=n/2`.
///
/// # Safety
/// `s` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn fs_fit_global(s: *const FsSeries, out: *mut FsFit) -> FsStatus {
    guard(|| {
        if out.is_null() {
            return null("out");
        }
        let Some(s) = s.as_ref() else {
            return null("series");
        };
        match estimator::fit_window(s.0.values(), &EstimatorConfig::default()) {
            Ok(f) => {
                *out = FsFit::from(&f);
                FsStatus::Ok
            }
            Err(e) => fail(e),
        }
    })
}

/// Volatility rescaled to a horizon of `m` samples.
#[no_mangle]
pub extern "C" fn fs_rescale_volatility(fit: FsFit, m: f64) -> f64 {
    fit.volatility * m.powf(fit.hurst)
}

/// Opaque rolling-window track.
pub struct FsTrack(RollingTrack);

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct FsTrackPoint {
    pub start: usize,
    pub center: f64,
    pub fit: FsFit,
}

/// Rolling estimates with default inertial range.
///
/// # Safety
/// `s` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn fs_rolling_estimate(
    s: *const FsSeries,
    window: usize,
    step: usize,
    out: *mut *mut FsTrack,
) -> FsStatus {
    guard(|| {
        if out.is_null() {
            return null("out");
        }
        let Some(s) = s.as_ref() else {
            return null("series");
        };
        match estimator::rolling_estimate(&s.0, window, step, &EstimatorConfig::default()) {
            Ok(t) => {
                put(out, FsTrack(t));
                FsStatus::Ok
            }
            Err(e) => fail(e),
        }
    })
}

/// # Safety
/// `t` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn fs_track_len(t: *const FsTrack) -> usize {
    t.as_ref().map_or(0, |t| t.0.points.len())
}

/// # Safety
/// `t` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn fs_track_point(
    t: *const FsTrack,
    i: usize,
    out: *mut FsTrackPoint,
) -> FsStatus {
    guard(|| {
        if out.is_null() {
            return null("out");
        }
        let Some(t) = t.as_ref() else {
            return null("track");
        };
        match t.0.points.get(i) {
            Some(p) => {
                *out = FsTrackPoint {
                    start: p.start,
                    center: p.center,
                    fit: FsFit::from(&p.fit),
                };
                FsStatus::Ok
            }
            None => {
                set_error(format!(
                    "InvalidParameter: index {i} out of {}",
                    t.0.points.len()
                ));
                FsStatus::InvalidArgument
            }
        }
    })
}

/// # Safety
/// `t` must be null or a handle not freed before.
#[no_mangle]
pub unsafe extern "C" fn fs_track_free(t: *mut FsTrack) {
    if !t.is_null() {
        drop(Box::from_raw(t));
    }
}

/// Opaque segmentation result.
pub struct FsPartition(Partition);

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct FsSegment {
    pub start: usize,
    pub len: usize,
    pub residual: f64,
    pub fit: FsFit,
}

/// Two-level exhaustive segmentation into `segments` parts.
///
/// # Safety
/// `s` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn fs_segment(
    s: *const FsSeries,
    segments: usize,
    coarse: usize,
    fine: usize,
    min_len: usize,
    out: *mut *mut FsPartition,
) -> FsStatus {
    guard(|| {
        if out.is_null() {
            return null("out");
        }
        let Some(s) = s.as_ref() else {
            return null("series");
        };
        let cfg = SearchConfig {
            segments,
            coarse,
            fine,
            min_len,
        };
        match segment::search_partition(&s.0, &cfg) {
            Ok(p) => {
                put(out, FsPartition(p));
                FsStatus::Ok
            }
            Err(e) => fail(e),
        }
    })
}

/// # Safety
/// `p` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn fs_partition_len(p: *const FsPartition) -> usize {
    p.as_ref().map_or(0, |p| p.0.segments.len())
}

/// Total residual, NaN for a null handle.
///
/// # Safety
/// `p` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn fs_partition_residual(p: *const FsPartition) -> f64 {
    p.as_ref().map_or(f64::NAN, |p| p.0.residual)
}

/// # Safety
/// `p` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn fs_partition_segment(
    p: *const FsPartition,
    i: usize,
    out: *mut FsSegment,
) -> FsStatus {
    guard(|| {
        if out.is_null() {
            return null("out");
        }
        let Some(p) = p.as_ref() else {
            return null("partition");
        };
        match p.0.segments.get(i) {
            Some(s) => {
                *out = FsSegment {
                    start: s.start,
                    len: s.len,
                    residual: s.residual,
                    fit: FsFit::from(&s.fit),
                };
                FsStatus::Ok
            }
            None => {
                set_error(format!(
                    "InvalidParameter: index {i} out of {}",
                    p.0.segments.len()
                ));
                FsStatus::InvalidArgument
            }
        }
    })
}

/// # Safety
/// `p` must be null or a handle not freed before.
#[no_mangle]
pub unsafe extern "C" fn fs_partition_free(p: *mut FsPartition) {
    if !p.is_null() {
        drop(Box::from_raw(p));
    }
}

/// `n` interval-averaged fBm observations (first one zero) into `out`.
///
/// # Safety
/// `out` must hold `n` values.
#[no_mangle]
pub unsafe extern "C" fn fs_sample_fbm(
    hurst: f64,
    volatility: f64,
    n: usize,
    seed: u64,
    out: *mut f64,
) -> FsStatus {
    guard(|| {
        if out.is_null() {
            return null("out");
        }
        match synth::sample_fbm_observations(&FbmSpec::new(hurst, volatility, n, seed)) {
            Ok(v) => write_array(&v, out, n, ptr::null_mut()),
            Err(e) => fail(e),
        }
    })
}
