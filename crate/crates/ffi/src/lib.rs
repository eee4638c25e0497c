//! C ABI over `codedmv`.
//!
//! Collections are opaque handles created from a scheme-config JSON string
//! and released with `codedmv_collection_free`. Every fallible call returns a
//! `CodedmvStatus`; on failure `codedmv_last_error` describes what went wrong
//! on the calling thread. Strings handed out by the library must be released
//! with `codedmv_string_free`.

use std::cell::RefCell;
use std::ffi::{c_char, c_int, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use codedmv::analysis::{analyze, certify_full_rank, AnalysisOptions, EnumerationMode, PatternBound, DEFAULT_RANK_TOL};
use codedmv::coding::{decode, simulate, CodedJob, CodingError, InputMatrix, Schedule};
use codedmv::{GeneratorCollection, SchemeConfig};
use nalgebra::{DMatrix, DVector};

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CodedmvStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidUtf8 = 2,
    ConfigError = 3,
    CertificationFailed = 4,
    Infeasible = 5,
    ShapeMismatch = 6,
    Internal = 7,
}

/// Opaque generator collection.
pub struct CodedmvCollection {
    inner: GeneratorCollection,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(msg: impl ToString) {
    let text = msg.to_string().replace('\0', " ");
    LAST_ERROR.with(|e| *e.borrow_mut() = CString::new(text).expect("interior NULs removed"));
}

fn fail(status: CodedmvStatus, msg: impl ToString) -> CodedmvStatus {
    set_error(msg);
    status
}

/// Runs `f`, turning a panic into `Internal`.
fn guarded(f: impl FnOnce() -> CodedmvStatus) -> CodedmvStatus {
    set_error("");
    catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|_| fail(CodedmvStatus::Internal, "internal panic"))
}

fn options(full_mode: c_int, strict: c_int) -> AnalysisOptions {
    AnalysisOptions {
        mode: if full_mode != 0 { EnumerationMode::Full } else { EnumerationMode::BlockAligned },
        bound: if strict != 0 { PatternBound::Strict } else { PatternBound::Inclusive },
        ..AnalysisOptions::default()
    }
}

/// Message for the most recent failure on this thread; empty after a
/// success. The pointer stays valid until the next library call on the
/// same thread.
#[no_mangle]
pub extern "C" fn codedmv_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// Builds a collection from a NUL-terminated scheme-config JSON string.
///
/// # Safety
/// `config_json` must be a valid C string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn codedmv_collection_from_config(
    config_json: *const c_char,
    out: *mut *mut CodedmvCollection,
) -> CodedmvStatus {
    guarded(|| {
        if config_json.is_null() || out.is_null() {
            return fail(CodedmvStatus::NullPointer, "null argument");
        }
        *out = ptr::null_mut();
        let Ok(text) = CStr::from_ptr(config_json).to_str() else {
            return fail(CodedmvStatus::InvalidUtf8, "config is not UTF-8");
        };
        match SchemeConfig::from_json(text).and_then(|c| c.build()) {
            Ok(inner) => {
                *out = Box::into_raw(Box::new(CodedmvCollection { inner }));
                CodedmvStatus::Ok
            }
            Err(e) => fail(CodedmvStatus::ConfigError, e),
        }
    })
}

/// Releases a collection. Null is ignored.
///
/// # Safety
/// `coll` must come from `codedmv_collection_from_config` and not be used
/// afterwards.
#[no_mangle]
pub unsafe extern "C" fn codedmv_collection_free(coll: *mut CodedmvCollection) {
    if !coll.is_null() {
        drop(Box::from_raw(coll));
    }
}

/// Writes N, Δ, ℓ and s. Any output pointer may be null.
///
/// # Safety
/// `coll` must be a live handle; non-null outputs must be writable.
#[no_mangle]
pub unsafe extern "C" fn codedmv_collection_shape(
    coll: *const CodedmvCollection,
    n_workers: *mut usize,
    delta: *mut usize,
    ell: *mut usize,
    s: *mut usize,
) -> CodedmvStatus {
    guarded(|| {
        let Some(c) = coll.as_ref() else {
            return fail(CodedmvStatus::NullPointer, "null collection");
        };
        let c = &c.inner;
        for (p, v) in [(n_workers, c.n_workers()), (delta, c.delta()), (ell, c.ell()), (s, c.s())] {
            if !p.is_null() {
                *p = v;
            }
        }
        CodedmvStatus::Ok
    })
}

/// Fraction of nonzero generator entries.
///
/// # Safety
/// `coll` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn codedmv_collection_density(coll: *const CodedmvCollection, out: *mut f64) -> CodedmvStatus {
    guarded(|| match (coll.as_ref(), out.is_null()) {
        (Some(c), false) => {
            *out = c.inner.density();
            CodedmvStatus::Ok
        }
        _ => fail(CodedmvStatus::NullPointer, "null argument"),
    })
}

/// Certifies full rank over every pattern. `*passed` is 1 or 0; a failing
/// verdict still returns `Ok` and the failing pattern is in
/// `codedmv_last_error`.
///
/// # Safety
/// `coll` must be a live handle and `passed` writable.
#[no_mangle]
pub unsafe extern "C" fn codedmv_certify(
    coll: *const CodedmvCollection,
    full_mode: c_int,
    strict: c_int,
    passed: *mut c_int,
) -> CodedmvStatus {
    guarded(|| {
        let (Some(c), false) = (coll.as_ref(), passed.is_null()) else {
            return fail(CodedmvStatus::NullPointer, "null argument");
        };
        let opts = options(full_mode, strict);
        let cert = certify_full_rank(&c.inner, opts.mode, opts.bound, DEFAULT_RANK_TOL);
        *passed = c_int::from(cert.verdict.passed());
        if !cert.verdict.passed() {
            set_error(format!("{:?}", cert.verdict));
        }
        CodedmvStatus::Ok
    })
}

/// Runs the analyzer and returns the report as a JSON string.
///
/// # Safety
/// `coll` must be a live handle and `out_json` writable. Free the result
/// with `codedmv_string_free`.
#[no_mangle]
pub unsafe extern "C" fn codedmv_analyze_json(
    coll: *const CodedmvCollection,
    full_mode: c_int,
    strict: c_int,
    out_json: *mut *mut c_char,
) -> CodedmvStatus {
    guarded(|| {
        let (Some(c), false) = (coll.as_ref(), out_json.is_null()) else {
            return fail(CodedmvStatus::NullPointer, "null argument");
        };
        *out_json = ptr::null_mut();
        match analyze(&c.inner, &options(full_mode, strict)) {
            Ok(report) => match serde_json::to_string(&report).map(CString::new) {
                Ok(Ok(s)) => {
                    *out_json = s.into_raw();
                    CodedmvStatus::Ok
                }
                _ => fail(CodedmvStatus::Internal, "report serialization failed"),
            },
            Err(e) => fail(CodedmvStatus::ConfigError, e),
        }
    })
}

/// Releases a string returned by the library. Null is ignored.
///
/// # Safety
/// `s` must come from this library and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn codedmv_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Encodes row-major `a` (`rows`×`cols`), runs the workers with the given
/// per-worker product budgets (N of them), decodes, and writes `A·x` into
/// `out_ax` (`rows` values). `out_residual` and `out_kappa` may be null.
///
/// # Safety
/// All array pointers must be valid for the stated lengths.
#[no_mangle]
pub unsafe extern "C" fn codedmv_multiply(
    coll: *const CodedmvCollection,
    a: *const f64,
    rows: usize,
    cols: usize,
    x: *const f64,
    budgets: *const usize,
    n_budgets: usize,
    out_ax: *mut f64,
    out_residual: *mut f64,
    out_kappa: *mut f64,
) -> CodedmvStatus {
    guarded(|| {
        let Some(c) = coll.as_ref() else {
            return fail(CodedmvStatus::NullPointer, "null collection");
        };
        if a.is_null() || x.is_null() || budgets.is_null() || out_ax.is_null() {
            return fail(CodedmvStatus::NullPointer, "null array");
        }
        let a = DMatrix::from_row_slice(rows, cols, std::slice::from_raw_parts(a, rows * cols));
        let x = DVector::from_column_slice(std::slice::from_raw_parts(x, cols));
        let schedule = Schedule::Budgets { budgets: std::slice::from_raw_parts(budgets, n_budgets).to_vec() };
        let result = CodedJob::new(InputMatrix::auto(a), x, c.inner.clone()).and_then(|job| {
            let encoded = job.encode();
            let trace = simulate(&job, &encoded, &schedule)?;
            decode(&trace, &job)
        });
        match result {
            Ok(d) => {
                std::slice::from_raw_parts_mut(out_ax, rows).copy_from_slice(&d.ax);
                if !out_residual.is_null() {
                    *out_residual = d.residual;
                }
                if !out_kappa.is_null() {
                    *out_kappa = d.kappa;
                }
                CodedmvStatus::Ok
            }
            Err(e) => {
                let status = match e {
                    CodingError::Infeasible { .. } | CodingError::NotDecodable { .. } => CodedmvStatus::Infeasible,
                    CodingError::RankDeficient { .. } => CodedmvStatus::CertificationFailed,
                    CodingError::Domain(_) => CodedmvStatus::ConfigError,
                    _ => CodedmvStatus::ShapeMismatch,
                };
                fail(status, e)
            }
        }
    })
}
