use std::ffi::{CStr, CString};
use std::process::Command;
use std::ptr;

use fracspec_ffi::*;

fn last_error() -> String {
    let p = fs_last_error_message();
    assert!(!p.is_null());
    unsafe { CStr::from_ptr(p) }.to_string_lossy().into_owned()
}

fn fbm(n: usize, seed: u64) -> Vec<f64> {
    let mut v = vec![0.0; n];
    assert_eq!(
        unsafe { fs_sample_fbm(0.6, 0.02, n, seed, v.as_mut_ptr()) },
        FsStatus::Ok
    );
    v
}

fn series(values: &[f64]) -> *mut FsSeries {
    let mut s = ptr::null_mut();
    assert_eq!(
        unsafe { fs_series_from_log(values.as_ptr(), values.len(), &mut s) },
        FsStatus::Ok
    );
    s
}

#[test]
fn model_spectrum_brownian_value() {
    assert!((fs_model_spectrum(0.5, 1.0, 1) - 1.0 / 3.0).abs() < 1e-12);
}

#[test]
fn version_string() {
    let v = unsafe { CStr::from_ptr(fs_version()) }.to_str().unwrap();
    assert_eq!(v, env!("CARGO_PKG_VERSION"));
}

#[test]
fn series_roundtrip_and_fit() {
    let v = fbm(600, 1);
    let s = series(&v);
    assert_eq!(unsafe { fs_series_len(s) }, 600);
    let mut back = vec![0.0; 600];
    let mut len = 0;
    assert_eq!(
        unsafe { fs_series_values(s, back.as_mut_ptr(), 600, &mut len) },
        FsStatus::Ok
    );
    assert_eq!(len, 600);
    assert_eq!(back, v);

    let mut fit = FsFit::default();
    assert_eq!(unsafe { fs_fit_global(s, &mut fit) }, FsStatus::Ok);
    let lib = fracspec::estimator::fit_window(&v, &Default::default()).unwrap();
    assert_eq!(fit.hurst, lib.hurst);
    assert_eq!(fit.volatility, lib.volatility);
    assert_eq!(
        fs_rescale_volatility(fit, 365.0),
        fracspec::estimator::rescale_volatility(&lib, 365.0)
    );
    unsafe { fs_series_free(s) };
}

#[test]
fn prices_are_logged() {
    let p = [1.0, std::f64::consts::E, 1.0];
    let mut s = ptr::null_mut();
    assert_eq!(
        unsafe { fs_series_from_prices(p.as_ptr(), 3, &mut s) },
        FsStatus::Ok
    );
    let mut out = [0.0; 3];
    assert_eq!(
        unsafe { fs_series_values(s, out.as_mut_ptr(), 3, ptr::null_mut()) },
        FsStatus::Ok
    );
    assert!((out[1] - 1.0).abs() < 1e-15 && out[0] == 0.0);
    unsafe { fs_series_free(s) };
}

#[test]
fn buffer_too_small_reports_length() {
    let v = fbm(100, 2);
    let mut out = [0.0; 3];
    let mut len = 0;
    let st = unsafe { fs_scale_spectrum(v.as_ptr(), 100, 2, 50, out.as_mut_ptr(), 3, &mut len) };
    assert_eq!(st, FsStatus::BufferTooSmall);
    assert_eq!(len, 49);
    let mut full = vec![0.0; len];
    assert_eq!(
        unsafe { fs_scale_spectrum(v.as_ptr(), 100, 2, 50, full.as_mut_ptr(), len, &mut len) },
        FsStatus::Ok
    );
    let hw = fracspec::spectrum::HaarWindow::new(&v);
    assert_eq!(full[0], hw.energy(2).unwrap());
}

#[test]
fn error_codes_and_messages() {
    let bad = [1.0, -2.0];
    let mut s = ptr::null_mut();
    assert_eq!(
        unsafe { fs_series_from_prices(bad.as_ptr(), 2, &mut s) },
        FsStatus::InvalidData
    );
    assert!(
        last_error().starts_with("NonPositivePrice"),
        "{}",
        last_error()
    );
    assert!(s.is_null());

    assert_eq!(
        unsafe { fs_series_from_prices(ptr::null(), 5, &mut s) },
        FsStatus::NullPointer
    );

    let v = fbm(50, 3);
    let h = series(&v);
    let mut t = ptr::null_mut();
    assert_eq!(
        unsafe { fs_rolling_estimate(h, 365, 1, &mut t) },
        FsStatus::InvalidArgument
    );
    assert!(last_error().starts_with("WindowExceedsSeries"));

    let mut out = [0.0; 10];
    let st =
        unsafe { fs_scale_spectrum(v.as_ptr(), 50, 5, 40, out.as_mut_ptr(), 10, ptr::null_mut()) };
    assert_eq!(st, FsStatus::InvalidArgument);

    let path = CString::new("/nonexistent/prices.csv").unwrap();
    assert_eq!(
        unsafe { fs_series_load_csv(path.as_ptr(), &mut s) },
        FsStatus::Io
    );
    unsafe { fs_series_free(h) };
}

#[test]
fn track_handle() {
    let v = fbm(200, 4);
    let s = series(&v);
    let mut t = ptr::null_mut();
    assert_eq!(
        unsafe { fs_rolling_estimate(s, 100, 25, &mut t) },
        FsStatus::Ok
    );
    assert_eq!(unsafe { fs_track_len(t) }, 5);
    let mut p = FsTrackPoint::default();
    assert_eq!(unsafe { fs_track_point(t, 4, &mut p) }, FsStatus::Ok);
    assert_eq!(p.start, 100);
    assert_eq!(p.center, 149.5);
    assert_eq!(
        unsafe { fs_track_point(t, 5, &mut p) },
        FsStatus::InvalidArgument
    );
    unsafe {
        fs_track_free(t);
        fs_series_free(s);
    }
}

#[test]
fn partition_handle() {
    let v = fbm(300, 5);
    let s = series(&v);
    let mut p = ptr::null_mut();
    assert_eq!(
        unsafe { fs_segment(s, 2, 60, 10, 30, &mut p) },
        FsStatus::Ok
    );
    assert_eq!(unsafe { fs_partition_len(p) }, 2);
    let mut a = FsSegment::default();
    let mut b = FsSegment::default();
    unsafe {
        assert_eq!(fs_partition_segment(p, 0, &mut a), FsStatus::Ok);
        assert_eq!(fs_partition_segment(p, 1, &mut b), FsStatus::Ok);
    }
    assert_eq!(a.start, 0);
    assert_eq!(a.len + b.len, 300);
    assert!(((a.residual + b.residual) - unsafe { fs_partition_residual(p) }).abs() < 1e-12);
    let mut q = ptr::null_mut();
    assert_eq!(
        unsafe { fs_segment(s, 20, 60, 10, 30, &mut q) },
        FsStatus::InvalidArgument
    );
    assert!(last_error().starts_with("InfeasibleSegmentation"));
    unsafe {
        fs_partition_free(p);
        fs_series_free(s);
    }
}

#[test]
fn gaussianize_handle() {
    let v: Vec<f64> = fbm(300, 6).iter().map(|x| x * 3.0).collect();
    let s = series(&v);
    let mut g = ptr::null_mut();
    assert_eq!(unsafe { fs_series_gaussianize(s, &mut g) }, FsStatus::Ok);
    assert_eq!(unsafe { fs_series_len(g) }, 300);
    unsafe {
        fs_series_free(g);
        fs_series_free(s);
        fs_series_free(ptr::null_mut());
    }
    assert_eq!(unsafe { fs_series_len(ptr::null()) }, 0);
    assert!(unsafe { fs_partition_residual(ptr::null()) }.is_nan());
}

#[test]
fn header_compiles_as_c() {
    let dir = env!("CARGO_MANIFEST_DIR");
    let header = format!("{dir}/include/fracspec.h");
    let text = std::fs::read_to_string(&header).unwrap();
    for f in [
        "fs_series_from_prices",
        "fs_fit_global",
        "fs_segment",
        "fs_last_error_message",
        "FS_STATUS_BUFFER_TOO_SMALL",
    ] {
        assert!(text.contains(f), "{f} missing from header");
    }
    let tmp = tempfile::tempdir().unwrap();
    let src = tmp.path().join("use.c");
    std::fs::write(
        &src,
        "#include \"fracspec.h\"\n\
         int main(void) {\n\
           FsSeries *s = NULL; double p[3] = {1.0, 2.0, 3.0}; FsFit f;\n\
           if (fs_series_from_prices(p, 3, &s) != FS_STATUS_OK) return 1;\n\
           FsStatus st = fs_fit_global(s, &f);\n\
           fs_series_free(s);\n\
           return st == FS_STATUS_OK ? 0 : (int)st;\n\
         }\n",
    )
    .unwrap();
    let cc = std::env::var("CC").unwrap_or_else(|_| "cc".into());
    let status = match Command::new(&cc)
        .args(["-std=c99", "-Wall", "-Werror", "-fsyntax-only", "-I"])
        .arg(format!("{dir}/include"))
        .arg(&src)
        .status()
    {
        Ok(s) => s,
        Err(_) => {
            eprintln!("no C compiler available, header syntax check skipped");
            return;
        }
    };
    assert!(status.success());
}
