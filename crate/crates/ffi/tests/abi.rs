use std::ffi::{CStr, CString};
use std::path::PathBuf;
use std::process::Command;
use std::ptr;

use codedmv_ffi::*;

fn build(json: &str) -> *mut CodedmvCollection {
    let cfg = CString::new(json).unwrap();
    let mut handle = ptr::null_mut();
    let status = unsafe { codedmv_collection_from_config(cfg.as_ptr(), &mut handle) };
    assert_eq!(status, CodedmvStatus::Ok, "{}", last_error());
    handle
}

fn last_error() -> String {
    unsafe { CStr::from_ptr(codedmv_last_error()) }.to_string_lossy().into_owned()
}

#[test]
fn companion_collection_round_trip() {
    let h = build(r#"{"construction":"udm-companion","N":6,"delta":4,"ell":3,"field":"2^3"}"#);
    let (mut n, mut d, mut l, mut s) = (0, 0, 0, 0);
    assert_eq!(unsafe { codedmv_collection_shape(h, &mut n, &mut d, &mut l, &mut s) }, CodedmvStatus::Ok);
    assert_eq!((n, d, l, s), (6, 12, 9, 3));

    let mut passed = -1;
    assert_eq!(unsafe { codedmv_certify(h, 0, 0, &mut passed) }, CodedmvStatus::Ok);
    assert_eq!(passed, 1);

    let mut json = ptr::null_mut();
    assert_eq!(unsafe { codedmv_analyze_json(h, 0, 0, &mut json) }, CodedmvStatus::Ok);
    let text = unsafe { CStr::from_ptr(json) }.to_str().unwrap().to_owned();
    unsafe { codedmv_string_free(json) };
    let report: serde_json::Value = serde_json::from_str(&text).unwrap();
    assert_eq!(report["pattern_count"], 120);
    assert_eq!(report["certification"]["verdict"]["result"], "pass");

    let (rows, cols) = (24usize, 5usize);
    let a: Vec<f64> = (0..rows * cols).map(|i| ((i * 7) % 11) as f64 - 5.0).collect();
    let x: Vec<f64> = (0..cols).map(|i| i as f64 * 0.5 - 1.0).collect();
    let budgets = [0usize, 9, 9, 9, 9, 9];
    let mut ax = vec![0.0; rows];
    let (mut residual, mut kappa) = (f64::NAN, f64::NAN);
    let status = unsafe {
        codedmv_multiply(h, a.as_ptr(), rows, cols, x.as_ptr(), budgets.as_ptr(), 6, ax.as_mut_ptr(), &mut residual, &mut kappa)
    };
    assert_eq!(status, CodedmvStatus::Ok, "{}", last_error());
    for i in 0..rows {
        let direct: f64 = (0..cols).map(|j| a[i * cols + j] * x[j]).sum();
        assert!((ax[i] - direct).abs() < 1e-9 * (1.0 + direct.abs()), "row {i}");
    }
    assert!(kappa >= 1.0 && residual.is_finite());
    unsafe { codedmv_collection_free(h) };
}

#[test]
fn errors_are_reported() {
    let cfg = CString::new(r#"{"construction":"udm-ff","N":6,"delta":4,"ell":3,"field":"2^2"}"#).unwrap();
    let mut handle = ptr::null_mut();
    let status = unsafe { codedmv_collection_from_config(cfg.as_ptr(), &mut handle) };
    assert_eq!(status, CodedmvStatus::ConfigError);
    assert!(handle.is_null());
    assert!(last_error().contains("field too small"));

    assert_eq!(unsafe { codedmv_collection_from_config(ptr::null(), &mut handle) }, CodedmvStatus::NullPointer);
    assert_eq!(unsafe { codedmv_collection_density(ptr::null(), ptr::null_mut()) }, CodedmvStatus::NullPointer);

    let h = build(r#"{"construction":"example-one","N":3,"delta":3,"ell":2}"#);
    let a = [1.0; 6];
    let x = [1.0; 2];
    let mut ax = [0.0; 3];
    let budgets = [0usize, 1, 1];
    let status = unsafe {
        codedmv_multiply(h, a.as_ptr(), 3, 2, x.as_ptr(), budgets.as_ptr(), 3, ax.as_mut_ptr(), ptr::null_mut(), ptr::null_mut())
    };
    assert_eq!(status, CodedmvStatus::Infeasible);
    unsafe { codedmv_collection_free(h) };
}

#[test]
fn failing_certification_names_pattern() {
    let h = build(r#"{"construction":"naive-real-embed","N":2,"delta":4,"ell":2,"beta":{"source":"explicit","values":[1.0,-1.0]}}"#);
    let mut passed = -1;
    assert_eq!(unsafe { codedmv_certify(h, 0, 0, &mut passed) }, CodedmvStatus::Ok);
    assert_eq!(passed, 0);
    assert!(last_error().contains("[2, 2]"));
    unsafe { codedmv_collection_free(h) };
}

#[test]
fn header_compiles_and_links_from_c() {
    let manifest = PathBuf::from(env!("CARGO_MANIFEST_DIR"));
    let header_dir = manifest.join("include");
    assert!(header_dir.join("codedmv.h").exists());
    let lib_dir = std::env::current_exe().unwrap().parent().unwrap().parent().unwrap().to_path_buf();
    if !lib_dir.join("libcodedmv_ffi.so").exists() || Command::new("cc").arg("--version").output().is_err() {
        eprintln!("skipping C link check: no cc or no shared library in {}", lib_dir.display());
        return;
    }
    let dir = tempfile::tempdir().unwrap();
    let src = dir.path().join("smoke.c");
    std::fs::write(
        &src,
        r#"#include <stdio.h>
#include "codedmv.h"
int main(void) {
    CodedmvCollection *c = NULL;
    if (codedmv_collection_from_config("{\"construction\":\"example-one\",\"N\":3,\"delta\":3,\"ell\":2}", &c) != CODEDMV_STATUS_OK) return 1;
    int passed = 0;
    if (codedmv_certify(c, 0, 0, &passed) != CODEDMV_STATUS_OK || passed != 1) return 2;
    double a[6] = {1, 2, 3, 4, 5, 6}, x[2] = {1, -1}, ax[3];
    size_t budgets[3] = {1, 1, 1};
    if (codedmv_multiply(c, a, 3, 2, x, budgets, 3, ax, NULL, NULL) != CODEDMV_STATUS_OK) return 3;
    codedmv_collection_free(c);
    printf("%.1f %.1f %.1f\n", ax[0], ax[1], ax[2]);
    return 0;
}
"#,
    )
    .unwrap();
    let exe = dir.path().join("smoke");
    let status = Command::new("cc")
        .arg(&src)
        .arg("-I")
        .arg(&header_dir)
        .arg("-L")
        .arg(&lib_dir)
        .arg("-lcodedmv_ffi")
        .arg("-o")
        .arg(&exe)
        .status()
        .unwrap();
    assert!(status.success());
    let out = Command::new(&exe).env("LD_LIBRARY_PATH", &lib_dir).output().unwrap();
    assert!(out.status.success(), "exit {:?}", out.status.code());
    assert_eq!(String::from_utf8_lossy(&out.stdout).trim(), "-1.0 -1.0 -1.0");
}
