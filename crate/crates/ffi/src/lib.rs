//! C interface to the classifier, the language identifier and the evaluation
//! statistics.
//!
//! Every fallible function returns a [`TcStatus`]. On failure the message is
//! kept per thread and can be read with [`tc_last_error_message`]. Strings
//! returned through out-parameters are owned by the caller and must be
//! released with [`tc_string_free`]. Labels are encoded as `0` for work and
//! `1` for leisure.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use tripclass::classifier::{ClassifierError, ClassifierModel};
use tripclass::labeling::BinaryLabel;
use tripclass::langid::{LangIdError, LangIdModel};
use tripclass::stats::{confusion, macro_f1, mean_and_ci, micro_f1, paired_t_test};

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TcStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidUtf8 = 2,
    Io = 3,
    CorruptModel = 4,
    InvalidArgument = 5,
    InputTooShort = 6,
    Panic = 7,
}

/// Model handle for the work/leisure classifier.
pub struct TcClassifier(ClassifierModel);

/// Model handle for the language identifier.
pub struct TcLangId(LangIdModel);

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: impl Into<String>) {
    let msg = CString::new(msg.into().replace('\0', " ")).expect("no interior nul");
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(msg));
}

fn fail(status: TcStatus, msg: impl Into<String>) -> TcStatus {
    set_error(msg);
    status
}

/// Runs `f`, turning panics into `Panic`.
fn guard(f: impl FnOnce() -> TcStatus) -> TcStatus {
    LAST_ERROR.with(|e| *e.borrow_mut() = None);
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(status) => status,
        Err(_) => fail(TcStatus::Panic, "internal panic"),
    }
}

unsafe fn str_arg<'a>(p: *const c_char, what: &str) -> Result<&'a str, TcStatus> {
    if p.is_null() {
        return Err(fail(TcStatus::NullPointer, format!("{what} is null")));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| fail(TcStatus::InvalidUtf8, format!("{what} is not valid UTF-8")))
}

unsafe fn slice_arg<'a, T>(p: *const T, len: usize, what: &str) -> Result<&'a [T], TcStatus> {
    if len == 0 {
        return Ok(&[]);
    }
    if p.is_null() {
        return Err(fail(TcStatus::NullPointer, format!("{what} is null")));
    }
    Ok(std::slice::from_raw_parts(p, len))
}

fn labels(codes: &[u8], what: &str) -> Result<Vec<BinaryLabel>, TcStatus> {
    codes
        .iter()
        .map(|&c| match c {
            0 => Ok(BinaryLabel::Work),
            1 => Ok(BinaryLabel::Leisure),
            other => Err(fail(TcStatus::InvalidArgument, format!("{what}: label code {other} is not 0 or 1"))),
        })
        .collect()
}

macro_rules! check_out {
    ($($p:ident),+) => {
        $(if $p.is_null() {
            return fail(TcStatus::NullPointer, concat!(stringify!($p), " is null"));
        })+
    };
}

macro_rules! try_arg {
    ($e:expr) => {
        match $e {
            Ok(v) => v,
            Err(status) => return status,
        }
    };
}

fn classifier_status(e: &ClassifierError) -> TcStatus {
    match e {
        ClassifierError::Io { .. } => TcStatus::Io,
        ClassifierError::CorruptModelFile(_) => TcStatus::CorruptModel,
        _ => TcStatus::InvalidArgument,
    }
}

fn langid_status(e: &LangIdError) -> TcStatus {
    match e {
        LangIdError::Io { .. } => TcStatus::Io,
        LangIdError::CorruptModelFile(_) => TcStatus::CorruptModel,
        LangIdError::InputTooShort => TcStatus::InputTooShort,
        _ => TcStatus::InvalidArgument,
    }
}

/// Message of the last failed call on this thread, or null. The pointer stays
/// valid until the next call into this library on the same thread.
#[no_mangle]
pub extern "C" fn tc_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |m| m.as_ptr()))
}

/// Library version as a static string.
#[no_mangle]
pub extern "C" fn tc_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// # Safety
/// `s` must be null or a string returned by this library.
#[no_mangle]
pub unsafe extern "C" fn tc_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// # Safety
/// `path` must be a nul-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn tc_classifier_load(path: *const c_char, out: *mut *mut TcClassifier) -> TcStatus {
    guard(|| {
        check_out!(out);
        let path = try_arg!(str_arg(path, "path"));
        match ClassifierModel::load(path) {
            Ok(model) => {
                *out = Box::into_raw(Box::new(TcClassifier(model)));
                TcStatus::Ok
            }
            Err(e) => fail(classifier_status(&e), e.to_string()),
        }
    })
}

/// Writes the predicted label code and the probability of that label.
///
/// # Safety
/// `model` must come from [`tc_classifier_load`]; all pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn tc_classifier_predict(
    model: *const TcClassifier,
    text: *const c_char,
    out_label: *mut u8,
    out_score: *mut f64,
) -> TcStatus {
    guard(|| {
        check_out!(model, out_label, out_score);
        let text = try_arg!(str_arg(text, "text"));
        let p = (*model).0.predict(text);
        *out_label = p.label.index() as u8;
        *out_score = p.score;
        TcStatus::Ok
    })
}

/// # Safety
/// `model` must be null or come from [`tc_classifier_load`], freed once.
#[no_mangle]
pub unsafe extern "C" fn tc_classifier_free(model: *mut TcClassifier) {
    if !model.is_null() {
        drop(Box::from_raw(model));
    }
}

/// # Safety
/// `path` must be a nul-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn tc_langid_load(path: *const c_char, out: *mut *mut TcLangId) -> TcStatus {
    guard(|| {
        check_out!(out);
        let path = try_arg!(str_arg(path, "path"));
        match LangIdModel::load(path) {
            Ok(model) => {
                *out = Box::into_raw(Box::new(TcLangId(model)));
                TcStatus::Ok
            }
            Err(e) => fail(langid_status(&e), e.to_string()),
        }
    })
}

/// Writes the most probable language code (free with [`tc_string_free`]) and
/// its probability.
///
/// # Safety
/// `model` must come from [`tc_langid_load`]; all pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn tc_langid_detect(
    model: *const TcLangId,
    text: *const c_char,
    out_lang: *mut *mut c_char,
    out_confidence: *mut f64,
) -> TcStatus {
    guard(|| {
        check_out!(model, out_lang, out_confidence);
        let text = try_arg!(str_arg(text, "text"));
        match (*model).0.detect(text) {
            Ok((lang, conf)) => {
                *out_lang = CString::new(lang).expect("language codes have no nul").into_raw();
                *out_confidence = conf;
                TcStatus::Ok
            }
            Err(e) => fail(langid_status(&e), e.to_string()),
        }
    })
}

/// # Safety
/// `model` must be null or come from [`tc_langid_load`], freed once.
#[no_mangle]
pub unsafe extern "C" fn tc_langid_free(model: *mut TcLangId) {
    if !model.is_null() {
        drop(Box::from_raw(model));
    }
}

unsafe fn f1_with(
    golds: *const u8,
    preds: *const u8,
    len: usize,
    out: *mut f64,
    metric: fn(&tripclass::stats::ConfusionMatrix) -> f64,
) -> TcStatus {
    guard(|| {
        check_out!(out);
        if len == 0 {
            return fail(TcStatus::InvalidArgument, "label vectors are empty");
        }
        let g = try_arg!(labels(try_arg!(slice_arg(golds, len, "golds")), "golds"));
        let p = try_arg!(labels(try_arg!(slice_arg(preds, len, "preds")), "preds"));
        match confusion(&g, &p) {
            Ok(cm) => {
                *out = metric(&cm);
                TcStatus::Ok
            }
            Err(e) => fail(TcStatus::InvalidArgument, e.to_string()),
        }
    })
}

/// Macro-averaged F1 over the two classes.
///
/// # Safety
/// `golds` and `preds` must point to `len` bytes; `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn tc_macro_f1(golds: *const u8, preds: *const u8, len: usize, out: *mut f64) -> TcStatus {
    f1_with(golds, preds, len, out, macro_f1)
}

/// Micro-averaged F1 (equal to accuracy for two classes).
///
/// # Safety
/// `golds` and `preds` must point to `len` bytes; `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn tc_micro_f1(golds: *const u8, preds: *const u8, len: usize, out: *mut f64) -> TcStatus {
    f1_with(golds, preds, len, out, micro_f1)
}

/// Two-sided paired t-test of per-fold scores `a` against `b`.
///
/// # Safety
/// `a` and `b` must point to `len` doubles; out-pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn tc_paired_t_test(
    a: *const f64,
    b: *const f64,
    len: usize,
    out_t: *mut f64,
    out_p: *mut f64,
) -> TcStatus {
    guard(|| {
        check_out!(out_t, out_p);
        let a = try_arg!(slice_arg(a, len, "a"));
        let b = try_arg!(slice_arg(b, len, "b"));
        match paired_t_test(a, b) {
            Ok(t) => {
                *out_t = t.t;
                *out_p = t.p_value;
                TcStatus::Ok
            }
            Err(e) => fail(TcStatus::InvalidArgument, e.to_string()),
        }
    })
}

/// Mean and 95% confidence half-width of per-fold scores.
///
/// # Safety
/// `values` must point to `len` doubles; out-pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn tc_mean_ci(
    values: *const f64,
    len: usize,
    out_mean: *mut f64,
    out_half_width: *mut f64,
) -> TcStatus {
    guard(|| {
        check_out!(out_mean, out_half_width);
        let v = try_arg!(slice_arg(values, len, "values"));
        match mean_and_ci(v, 0.95) {
            Ok(ci) => {
                *out_mean = ci.mean;
                *out_half_width = ci.ci_half_width;
                TcStatus::Ok
            }
            Err(e) => fail(TcStatus::InvalidArgument, e.to_string()),
        }
    })
}
