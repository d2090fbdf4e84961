//! C ABI for decree.
//!
//! Models cross the boundary as opaque [`DecreeModel`] handles. Every
//! fallible function returns a [`DecreeStatus`]; on failure the message is
//! available from [`decree_last_error_message`] on the same thread. Strings
//! returned through `char **` out-parameters are owned by the caller and
//! must be released with [`decree_string_free`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};

use decree::arch::{compose_pipeline, load_manifest, run_pipeline, RunOptions};
use decree::compare::{difftest, DifftestOptions};
use decree::dsl::{format_script, parse_script};
use decree::model::{canonical_hash, parse_app_model, serialize_app_model, AppModel};

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DecreeStatus {
    Ok = 0,
    NullArgument = 1,
    InvalidUtf8 = 2,
    ParseError = 3,
    NotFound = 4,
    PipelineError = 5,
    DifftestError = 6,
    Panic = 7,
}

/// An owned, validated app model.
pub struct DecreeModel {
    model: AppModel,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: impl Into<String>) {
    let msg = msg.into().replace('\0', " ");
    LAST_ERROR.with(|e| *e.borrow_mut() = CString::new(msg).ok());
}

fn fail(status: DecreeStatus, msg: impl Into<String>) -> DecreeStatus {
    set_error(msg);
    status
}

/// Runs `f`, turning panics into [`DecreeStatus::Panic`].
fn guard(f: impl FnOnce() -> DecreeStatus) -> DecreeStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(s) => {
            if s == DecreeStatus::Ok {
                LAST_ERROR.with(|e| *e.borrow_mut() = None);
            }
            s
        }
        Err(_) => fail(DecreeStatus::Panic, "internal panic"),
    }
}

unsafe fn text<'a>(p: *const c_char, what: &str) -> Result<&'a str, DecreeStatus> {
    if p.is_null() {
        return Err(fail(DecreeStatus::NullArgument, format!("`{what}` is null")));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| fail(DecreeStatus::InvalidUtf8, format!("`{what}` is not UTF-8")))
}

unsafe fn put_string(out: *mut *mut c_char, s: String) -> DecreeStatus {
    match CString::new(s) {
        Ok(c) => {
            *out = c.into_raw();
            DecreeStatus::Ok
        }
        Err(_) => fail(DecreeStatus::InvalidUtf8, "output contains a NUL byte"),
    }
}

macro_rules! tri {
    ($e:expr) => {
        match $e {
            Ok(v) => v,
            Err(s) => return s,
        }
    };
}

macro_rules! non_null {
    ($($p:ident),+) => {
        $(if $p.is_null() {
            return fail(DecreeStatus::NullArgument, concat!("`", stringify!($p), "` is null"));
        })+
    };
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn decree_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// FNV-1a 64 of `len` bytes at `data`. A null `data` hashes as empty.
///
/// # Safety
/// `data` must point to `len` readable bytes unless it is null.
#[no_mangle]
pub unsafe extern "C" fn decree_fnv1a64(data: *const u8, len: usize) -> u64 {
    if data.is_null() {
        return decree::fnv1a64(&[]).value();
    }
    decree::fnv1a64(std::slice::from_raw_parts(data, len)).value()
}

/// Message of the last failed call on this thread, or null. Valid until the
/// next call into the library on this thread.
#[no_mangle]
pub extern "C" fn decree_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(std::ptr::null(), |c| c.as_ptr()))
}

/// # Safety
/// `s` must be null or a string returned by this library, freed only once.
#[no_mangle]
pub unsafe extern "C" fn decree_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Parses and validates an app model document.
///
/// # Safety
/// `json` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn decree_model_parse(json: *const c_char, out: *mut *mut DecreeModel) -> DecreeStatus {
    guard(|| {
        non_null!(out);
        let json = tri!(text(json, "json"));
        match parse_app_model(json) {
            Ok(model) => {
                *out = Box::into_raw(Box::new(DecreeModel { model }));
                DecreeStatus::Ok
            }
            Err(e) => fail(DecreeStatus::ParseError, e.to_string()),
        }
    })
}

/// # Safety
/// `model` must be null or a handle from [`decree_model_parse`], freed only once.
#[no_mangle]
pub unsafe extern "C" fn decree_model_free(model: *mut DecreeModel) {
    if !model.is_null() {
        drop(Box::from_raw(model));
    }
}

/// Canonical text of the model.
///
/// # Safety
/// `model` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn decree_model_serialize(model: *const DecreeModel, out: *mut *mut c_char) -> DecreeStatus {
    guard(|| {
        non_null!(model, out);
        put_string(out, serialize_app_model(&(*model).model))
    })
}

/// # Safety
/// `model` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn decree_model_content_id(model: *const DecreeModel, out: *mut u64) -> DecreeStatus {
    guard(|| {
        non_null!(model, out);
        *out = (*model).model.content_id().value();
        DecreeStatus::Ok
    })
}

/// Number of callbacks, or 0 for a null handle.
///
/// # Safety
/// `model` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn decree_model_callback_count(model: *const DecreeModel) -> usize {
    model.as_ref().map_or(0, |m| m.model.callbacks.len())
}

/// Canonical hash of the named callback.
///
/// # Safety
/// `model` must be a live handle, `name` NUL-terminated, `out` writable.
#[no_mangle]
pub unsafe extern "C" fn decree_model_callback_hash(
    model: *const DecreeModel,
    name: *const c_char,
    out: *mut u64,
) -> DecreeStatus {
    guard(|| {
        non_null!(model, out);
        let name = tri!(text(name, "name"));
        match (*model).model.callback(name) {
            Some(cb) => {
                *out = canonical_hash(cb).value();
                DecreeStatus::Ok
            }
            None => fail(DecreeStatus::NotFound, format!("no callback `{name}`")),
        }
    })
}

/// Differentially tests two models under the default environment and
/// writes the report JSON to `report_out`. When `technique_manifest` is not
/// null, its OS policy and runtime settings apply to the instrumented side.
///
/// # Safety
/// Both handles must be live; `technique_manifest` null or NUL-terminated;
/// `report_out` writable.
#[no_mangle]
pub unsafe extern "C" fn decree_difftest(
    original: *const DecreeModel,
    instrumented: *const DecreeModel,
    technique_manifest: *const c_char,
    force_all: bool,
    report_out: *mut *mut c_char,
) -> DecreeStatus {
    guard(|| {
        non_null!(original, instrumented, report_out);
        let (a, b) = (&(*original).model, &(*instrumented).model);
        let mut options = DifftestOptions::default();
        options.gen.force_all = force_all;
        if !technique_manifest.is_null() {
            let text = tri!(text(technique_manifest, "technique_manifest"));
            let manifest = match load_manifest(text) {
                Ok(m) => m,
                Err(e) => return fail(DecreeStatus::ParseError, e.to_string()),
            };
            let artifacts = match compose_pipeline(&manifest)
                .map_err(|e| e.to_string())
                .and_then(|p| run_pipeline(&p, a, &RunOptions::default()).map_err(|e| e.to_string()))
            {
                Ok(a) => a,
                Err(e) => return fail(DecreeStatus::PipelineError, e),
            };
            options.os_policy = artifacts.os_policy;
            options.instrumented_runtime = artifacts.backend_config;
        }
        match difftest(a, b, &options) {
            Ok(run) => put_string(report_out, run.report.to_json()),
            Err(e) => fail(DecreeStatus::DifftestError, e.to_string()),
        }
    })
}

/// Canonical form of a test script.
///
/// # Safety
/// `script` must be NUL-terminated; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn decree_script_format(script: *const c_char, out: *mut *mut c_char) -> DecreeStatus {
    guard(|| {
        non_null!(out);
        let script = tri!(text(script, "script"));
        match parse_script(script) {
            Ok(s) => put_string(out, format_script(&s)),
            Err(e) => fail(DecreeStatus::ParseError, e.to_string()),
        }
    })
}
