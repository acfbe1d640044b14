//! C ABI over `stereolens`.
//!
//! Objects cross the boundary as opaque pointers that the caller frees with
//! the matching `*_free` function. Every fallible call returns an
//! [`SlStatus`]; on failure `sl_last_error_message` describes the problem
//! for the calling thread.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;

use stereolens::agreement::score_vectors;
use stereolens::classifier::{estimate_emissions, Probe, TfidfLogisticClassifier};
use stereolens::explain::{
    lime_explain, shap_exact_limited, shap_sampled, Attribution, CoalitionCache, LimeConfig, MaskedInstance,
};
use stereolens::Error;

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SlStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidUtf8 = 2,
    Io = 3,
    Data = 4,
    InvalidInput = 5,
    Probe = 6,
    Panic = 7,
}

/// A trained TF-IDF + logistic-regression classifier.
pub struct SlModel(TfidfLogisticClassifier);

/// A token attribution with C copies of its tokens.
pub struct SlAttribution {
    attr: Attribution,
    tokens: Vec<CString>,
}

/// Agreement between two attribution vectors. Undefined metrics are NaN
/// with their `*_defined` flag false.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SlAgreement {
    pub cosine: f64,
    pub pearson: f64,
    pub jsd: f64,
    pub cosine_defined: bool,
    pub pearson_defined: bool,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).expect("NULs removed");
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn status_of(e: &Error) -> SlStatus {
    match e {
        Error::Io { .. } => SlStatus::Io,
        Error::InvalidInput(_) => SlStatus::InvalidInput,
        Error::Probe(_) | Error::Provider(_) => SlStatus::Probe,
        _ => SlStatus::Data,
    }
}

fn guard(f: impl FnOnce() -> Result<(), SlStatus>) -> SlStatus {
    LAST_ERROR.with(|e| *e.borrow_mut() = None);
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => SlStatus::Ok,
        Ok(Err(s)) => s,
        Err(_) => {
            set_error("internal panic".into());
            SlStatus::Panic
        }
    }
}

fn fail(e: Error) -> SlStatus {
    let s = status_of(&e);
    set_error(e.to_string());
    s
}

unsafe fn str_arg<'a>(p: *const c_char, name: &str) -> Result<&'a str, SlStatus> {
    if p.is_null() {
        set_error(format!("{name} is null"));
        return Err(SlStatus::NullPointer);
    }
    CStr::from_ptr(p).to_str().map_err(|_| {
        set_error(format!("{name} is not valid UTF-8"));
        SlStatus::InvalidUtf8
    })
}

fn non_null<T>(p: *const T, name: &str) -> Result<(), SlStatus> {
    if p.is_null() {
        set_error(format!("{name} is null"));
        Err(SlStatus::NullPointer)
    } else {
        Ok(())
    }
}

/// Message for the last failed call on this thread, or null. The pointer
/// stays valid until the next `sl_*` call on the same thread.
#[no_mangle]
pub extern "C" fn sl_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(std::ptr::null(), |c| c.as_ptr()))
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn sl_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Loads a model file written by `stereolens train`.
///
/// # Safety
/// `path` must be a NUL-terminated string and `out` a writable pointer.
#[no_mangle]
pub unsafe extern "C" fn sl_model_load(path: *const c_char, out: *mut *mut SlModel) -> SlStatus {
    guard(|| {
        non_null(out, "out")?;
        let path = str_arg(path, "path")?;
        let model = TfidfLogisticClassifier::load(Path::new(path)).map_err(fail)?;
        *out = Box::into_raw(Box::new(SlModel(model)));
        Ok(())
    })
}

/// # Safety
/// `model` must come from `sl_model_load` and not be used afterwards. Null is ignored.
#[no_mangle]
pub unsafe extern "C" fn sl_model_free(model: *mut SlModel) {
    if !model.is_null() {
        drop(Box::from_raw(model));
    }
}

/// Stereotype probability for one text.
///
/// # Safety
/// `model` must be live, `text` NUL-terminated and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn sl_model_predict(model: *const SlModel, text: *const c_char, out: *mut f64) -> SlStatus {
    guard(|| {
        non_null(model, "model")?;
        non_null(out, "out")?;
        let text = str_arg(text, "text")?;
        *out = (*model).0.predict_proba(text).map_err(|e| fail(e.into()))?;
        Ok(())
    })
}

fn boxed(attr: Attribution) -> *mut SlAttribution {
    let tokens = attr.tokens.iter().map(|t| CString::new(t.as_str()).expect("tokens are alphanumeric")).collect();
    Box::into_raw(Box::new(SlAttribution { attr, tokens }))
}

/// Shapley attribution: exact when the text has at most `exact_limit`
/// tokens, otherwise sampled with `samples` permutations.
///
/// # Safety
/// `model` must be live, `text` NUL-terminated and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn sl_explain_shap(
    model: *const SlModel,
    text: *const c_char,
    exact_limit: usize,
    samples: usize,
    seed: u64,
    out: *mut *mut SlAttribution,
) -> SlStatus {
    guard(|| {
        non_null(model, "model")?;
        non_null(out, "out")?;
        let text = str_arg(text, "text")?;
        let probe = &(*model).0;
        let mut cache = CoalitionCache::new();
        let attr = if MaskedInstance::new(text).len() <= exact_limit {
            shap_exact_limited(probe, text, exact_limit, &mut cache)
        } else {
            shap_sampled(probe, text, samples, seed, &mut cache)
        }
        .map_err(fail)?;
        *out = boxed(attr);
        Ok(())
    })
}

/// LIME attribution.
///
/// # Safety
/// `model` must be live, `text` NUL-terminated and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn sl_explain_lime(
    model: *const SlModel,
    text: *const c_char,
    num_samples: usize,
    kernel_width: f64,
    ridge_lambda: f64,
    seed: u64,
    out: *mut *mut SlAttribution,
) -> SlStatus {
    guard(|| {
        non_null(model, "model")?;
        non_null(out, "out")?;
        let text = str_arg(text, "text")?;
        let cfg = LimeConfig { num_samples, kernel_width, ridge_lambda, seed };
        let attr = lime_explain(&(*model).0, text, &cfg, &mut CoalitionCache::new()).map_err(fail)?;
        *out = boxed(attr);
        Ok(())
    })
}

/// Token count, or 0 for null.
///
/// # Safety
/// `attr` must be live or null.
#[no_mangle]
pub unsafe extern "C" fn sl_attribution_len(attr: *const SlAttribution) -> usize {
    if attr.is_null() { 0 } else { (*attr).attr.len() }
}

/// Token `i`, or null when out of range. Valid until the attribution is freed.
///
/// # Safety
/// `attr` must be live or null.
#[no_mangle]
pub unsafe extern "C" fn sl_attribution_token(attr: *const SlAttribution, i: usize) -> *const c_char {
    if attr.is_null() {
        return std::ptr::null();
    }
    let attr = &*attr;
    attr.tokens.get(i).map_or(std::ptr::null(), |c| c.as_ptr())
}

/// Value for token `i`, or NaN when out of range.
///
/// # Safety
/// `attr` must be live or null.
#[no_mangle]
pub unsafe extern "C" fn sl_attribution_value(attr: *const SlAttribution, i: usize) -> f64 {
    if attr.is_null() {
        return f64::NAN;
    }
    let attr = &*attr;
    attr.attr.values.get(i).copied().unwrap_or(f64::NAN)
}

/// Empty-text prediction for SHAP, surrogate intercept for LIME.
///
/// # Safety
/// `attr` must be live or null.
#[no_mangle]
pub unsafe extern "C" fn sl_attribution_base_value(attr: *const SlAttribution) -> f64 {
    if attr.is_null() { f64::NAN } else { (*attr).attr.base_value }
}

/// # Safety
/// `attr` must come from an `sl_explain_*` call and not be used afterwards. Null is ignored.
#[no_mangle]
pub unsafe extern "C" fn sl_attribution_free(attr: *mut SlAttribution) {
    if !attr.is_null() {
        drop(Box::from_raw(attr));
    }
}

/// Cosine, Pearson and JS distance between two equal-length vectors.
///
/// # Safety
/// `phi` and `beta` must point to `len` doubles; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn sl_agreement(phi: *const f64, beta: *const f64, len: usize, out: *mut SlAgreement) -> SlStatus {
    guard(|| {
        non_null(phi, "phi")?;
        non_null(beta, "beta")?;
        non_null(out, "out")?;
        let a = std::slice::from_raw_parts(phi, len);
        let b = std::slice::from_raw_parts(beta, len);
        let s = score_vectors(a, b).map_err(fail)?;
        *out = SlAgreement {
            cosine: s.cosine.unwrap_or(f64::NAN),
            pearson: s.pearson.unwrap_or(f64::NAN),
            jsd: s.jsd,
            cosine_defined: s.cosine.is_some(),
            pearson_defined: s.pearson.is_some(),
        };
        Ok(())
    })
}

/// Grams of CO2 for a rate in g/s over a runtime in seconds.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn sl_estimate_emissions(co2_per_second: f64, runtime_seconds: f64, out: *mut f64) -> SlStatus {
    guard(|| {
        non_null(out, "out")?;
        *out = estimate_emissions(co2_per_second, runtime_seconds).map_err(fail)?;
        Ok(())
    })
}
