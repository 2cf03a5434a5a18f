//! C ABI over `obfuskit`.
//!
//! Datasets and models cross the boundary as opaque handles created by
//! `*_load`, `*_train` or `obf_obfuscate_*` and released with the matching
//! `*_free`. Every fallible function returns an [`ObfStatus`]; on failure
//! the message is available from [`obf_last_error`] on the same thread until
//! the next failing call. Panics are caught at the boundary and reported as
//! [`ObfStatus::Panic`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::PathBuf;
use std::ptr;

use obfuskit::attacks::codec;
use obfuskit::harness::{self, config::TrainSpec, ExperimentConfig};
use obfuskit::metrics::{self, ConfusionMatrix};
use obfuskit::obfuscate::{obfuscate_dataset_groups, obfuscate_dataset_individual, GroupParams, IndividualParams};
use obfuskit::{Dataset, Error, GroupSpec, Model, SensitiveSelection};

/// Status codes returned by every fallible function.
#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ObfStatus {
    Ok = 0,
    /// A required pointer argument was NULL.
    Null = 1,
    /// Invalid parameter, config or input file contents.
    Invalid = 2,
    /// File could not be read or written.
    Io = 3,
    /// Any other failure inside the library.
    Runtime = 4,
    /// The library panicked; the handle arguments are still valid.
    Panic = 5,
}

/// Opaque dataset handle.
pub struct ObfDataset {
    inner: Dataset,
}

/// Opaque model handle.
pub struct ObfModel {
    inner: Model,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

enum Failure {
    Null(&'static str),
    Core(Error),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Core(e)
    }
}

fn is_io(e: &Error) -> bool {
    match e {
        Error::Io { .. } => true,
        Error::Context { source, .. } => is_io(source),
        _ => false,
    }
}

fn guard<F>(f: F) -> ObfStatus
where
    F: FnOnce() -> Result<(), Failure>,
{
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => ObfStatus::Ok,
        Ok(Err(Failure::Null(arg))) => {
            set_error(format!("`{arg}` is NULL"));
            ObfStatus::Null
        }
        Ok(Err(Failure::Core(e))) => {
            let status = if e.is_validation() {
                ObfStatus::Invalid
            } else if is_io(&e) {
                ObfStatus::Io
            } else {
                ObfStatus::Runtime
            };
            set_error(e.to_string());
            status
        }
        Err(panic) => {
            let msg = panic
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| panic.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "unknown panic".to_string());
            set_error(format!("panic: {msg}"));
            ObfStatus::Panic
        }
    }
}

unsafe fn ref_arg<'a, T>(p: *const T, name: &'static str) -> Result<&'a T, Failure> {
    // SAFETY: the caller guarantees `p` is NULL or points to a live value.
    unsafe { p.as_ref() }.ok_or(Failure::Null(name))
}

unsafe fn str_arg<'a>(p: *const c_char, name: &'static str) -> Result<&'a str, Failure> {
    if p.is_null() {
        return Err(Failure::Null(name));
    }
    // SAFETY: non-null and NUL-terminated per the API contract.
    unsafe { CStr::from_ptr(p) }
        .to_str()
        .map_err(|_| Failure::Core(Error::invalid(name, "not valid UTF-8")))
}

unsafe fn slice_arg<'a, T>(p: *const T, len: usize, name: &'static str) -> Result<&'a [T], Failure> {
    if len == 0 {
        return Ok(&[]);
    }
    if p.is_null() {
        return Err(Failure::Null(name));
    }
    // SAFETY: non-null and valid for `len` elements per the API contract.
    Ok(unsafe { std::slice::from_raw_parts(p, len) })
}

unsafe fn slice_out<'a, T>(p: *mut T, len: usize, name: &'static str) -> Result<&'a mut [T], Failure> {
    if len == 0 {
        return Ok(&mut []);
    }
    if p.is_null() {
        return Err(Failure::Null(name));
    }
    // SAFETY: non-null and valid for `len` writable elements per the API contract.
    Ok(unsafe { std::slice::from_raw_parts_mut(p, len) })
}

unsafe fn write_out<T>(p: *mut T, value: T, name: &'static str) -> Result<(), Failure> {
    if p.is_null() {
        return Err(Failure::Null(name));
    }
    // SAFETY: non-null and writable per the API contract.
    unsafe { p.write(value) };
    Ok(())
}

fn check_len(expected: usize, found: usize) -> Result<(), Failure> {
    if expected != found {
        return Err(Error::DimensionMismatch { expected, found }.into());
    }
    Ok(())
}

/// Message of the last failure on this thread, or NULL. The pointer stays
/// valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn obf_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn obf_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Release a string returned by this library. NULL is ignored.
///
/// # Safety
/// `s` must come from this library and not have been freed already.
#[no_mangle]
pub unsafe extern "C" fn obf_string_free(s: *mut c_char) {
    if !s.is_null() {
        // SAFETY: produced by `CString::into_raw` in this crate.
        drop(unsafe { CString::from_raw(s) });
    }
}

fn new_dataset(inner: Dataset) -> *mut ObfDataset {
    Box::into_raw(Box::new(ObfDataset { inner }))
}

fn new_model(inner: Model) -> *mut ObfModel {
    Box::into_raw(Box::new(ObfModel { inner }))
}

/// Load a CSV dataset.
///
/// # Safety
/// `path` must be NUL-terminated; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn obf_dataset_load_csv(path: *const c_char, out: *mut *mut ObfDataset) -> ObfStatus {
    guard(|| {
        let path = unsafe { str_arg(path, "path") }?;
        if out.is_null() {
            return Err(Failure::Null("out"));
        }
        let ds = Dataset::load_csv(path)?;
        unsafe { write_out(out, new_dataset(ds), "out") }
    })
}

/// Write a dataset as CSV.
///
/// # Safety
/// `dataset` must be a live handle; `path` must be NUL-terminated.
#[no_mangle]
pub unsafe extern "C" fn obf_dataset_save_csv(dataset: *const ObfDataset, path: *const c_char) -> ObfStatus {
    guard(|| {
        let ds = unsafe { ref_arg(dataset, "dataset") }?;
        let path = unsafe { str_arg(path, "path") }?;
        ds.inner.save_csv(path)?;
        Ok(())
    })
}

/// Number of samples; 0 for NULL.
///
/// # Safety
/// `dataset` must be NULL or a live handle.
#[no_mangle]
pub unsafe extern "C" fn obf_dataset_len(dataset: *const ObfDataset) -> usize {
    unsafe { dataset.as_ref() }.map_or(0, |d| d.inner.len())
}

/// Feature dimension; 0 for NULL.
///
/// # Safety
/// `dataset` must be NULL or a live handle.
#[no_mangle]
pub unsafe extern "C" fn obf_dataset_dim(dataset: *const ObfDataset) -> usize {
    unsafe { dataset.as_ref() }.map_or(0, |d| d.inner.dim())
}

/// Number of classes; 0 for NULL.
///
/// # Safety
/// `dataset` must be NULL or a live handle.
#[no_mangle]
pub unsafe extern "C" fn obf_dataset_num_classes(dataset: *const ObfDataset) -> usize {
    unsafe { dataset.as_ref() }.map_or(0, |d| d.inner.num_classes())
}

/// Copy sample `index` into `features` (length `dim`) and its label into
/// `label`.
///
/// # Safety
/// `dataset` must be a live handle; `features` must hold `dim` doubles;
/// `label` must be writable.
#[no_mangle]
pub unsafe extern "C" fn obf_dataset_sample(
    dataset: *const ObfDataset,
    index: usize,
    features: *mut f64,
    dim: usize,
    label: *mut usize,
) -> ObfStatus {
    guard(|| {
        let ds = unsafe { ref_arg(dataset, "dataset") }?;
        let s = ds
            .inner
            .samples()
            .get(index)
            .ok_or_else(|| Error::invalid("index", format!("{index} out of range for {} samples", ds.inner.len())))?;
        check_len(ds.inner.dim(), dim)?;
        unsafe { slice_out(features, dim, "features") }?.copy_from_slice(&s.features);
        unsafe { write_out(label, s.label, "label") }
    })
}

/// Release a dataset handle. NULL is ignored.
///
/// # Safety
/// `dataset` must come from this library and not have been freed already.
#[no_mangle]
pub unsafe extern "C" fn obf_dataset_free(dataset: *mut ObfDataset) {
    if !dataset.is_null() {
        // SAFETY: produced by `Box::into_raw` in this crate.
        drop(unsafe { Box::from_raw(dataset) });
    }
}

/// Individual-sample obfuscation of a random `selection_ratio` of the
/// samples (all of them at 1), noising `coord_ratio` of each selected
/// sample's coordinates with N(0, sigma).
///
/// # Safety
/// `dataset` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn obf_obfuscate_individual(
    dataset: *const ObfDataset,
    selection_ratio: f64,
    coord_ratio: f64,
    sigma: f64,
    seed: u64,
    out: *mut *mut ObfDataset,
) -> ObfStatus {
    guard(|| {
        let ds = &unsafe { ref_arg(dataset, "dataset") }?.inner;
        if out.is_null() {
            return Err(Failure::Null("out"));
        }
        let params = IndividualParams::new(coord_ratio, sigma)?;
        let sel = if selection_ratio == 1.0 {
            SensitiveSelection::all(ds.len())
        } else {
            SensitiveSelection::random_fraction(ds.len(), selection_ratio, seed)?
        };
        let result = obfuscate_dataset_individual(ds, &sel, &params, seed)?;
        unsafe { write_out(out, new_dataset(result), "out") }
    })
}

/// Group obfuscation: append `aug_ratio` times the group size of noised
/// negatives. `label < 0` selects the whole dataset, otherwise the samples
/// of that class.
///
/// # Safety
/// `dataset` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn obf_obfuscate_group(
    dataset: *const ObfDataset,
    label: i64,
    aug_ratio: f64,
    sigma: f64,
    seed: u64,
    out: *mut *mut ObfDataset,
) -> ObfStatus {
    guard(|| {
        let ds = &unsafe { ref_arg(dataset, "dataset") }?.inner;
        if out.is_null() {
            return Err(Failure::Null("out"));
        }
        let params = GroupParams::new(aug_ratio, sigma)?;
        let group = if label < 0 {
            GroupSpec::WholeDataset
        } else {
            GroupSpec::ByLabel(label as usize)
        };
        let result = obfuscate_dataset_groups(ds, &[group], &params, seed)?;
        unsafe { write_out(out, new_dataset(result), "out") }
    })
}

/// Train a model on `dataset`. `spec_json` holds `model`, `train` and an
/// optional `seed`, e.g.
/// `{"model":{"architecture":"softmax"},"train":{"epochs":20,"batch_size":16,"learning_rate":0.1}}`.
///
/// # Safety
/// `dataset` must be a live handle; `spec_json` NUL-terminated; `out`
/// writable.
#[no_mangle]
pub unsafe extern "C" fn obf_model_train(
    dataset: *const ObfDataset,
    spec_json: *const c_char,
    out: *mut *mut ObfModel,
) -> ObfStatus {
    guard(|| {
        let ds = &unsafe { ref_arg(dataset, "dataset") }?.inner;
        let spec = TrainSpec::from_json(unsafe { str_arg(spec_json, "spec_json") }?)?;
        if out.is_null() {
            return Err(Failure::Null("out"));
        }
        let model = spec.fit(ds)?;
        unsafe { write_out(out, new_model(model), "out") }
    })
}

/// Load a model from JSON.
///
/// # Safety
/// `path` must be NUL-terminated; `out` writable.
#[no_mangle]
pub unsafe extern "C" fn obf_model_load(path: *const c_char, out: *mut *mut ObfModel) -> ObfStatus {
    guard(|| {
        let path = unsafe { str_arg(path, "path") }?;
        if out.is_null() {
            return Err(Failure::Null("out"));
        }
        let model = Model::load(path)?;
        unsafe { write_out(out, new_model(model), "out") }
    })
}

/// Save a model as JSON.
///
/// # Safety
/// `model` must be a live handle; `path` NUL-terminated.
#[no_mangle]
pub unsafe extern "C" fn obf_model_save(model: *const ObfModel, path: *const c_char) -> ObfStatus {
    guard(|| {
        let m = unsafe { ref_arg(model, "model") }?;
        let path = unsafe { str_arg(path, "path") }?;
        m.inner.save(PathBuf::from(path))?;
        Ok(())
    })
}

/// Release a model handle. NULL is ignored.
///
/// # Safety
/// `model` must come from this library and not have been freed already.
#[no_mangle]
pub unsafe extern "C" fn obf_model_free(model: *mut ObfModel) {
    if !model.is_null() {
        // SAFETY: produced by `Box::into_raw` in this crate.
        drop(unsafe { Box::from_raw(model) });
    }
}

/// Total number of parameters; 0 for NULL.
///
/// # Safety
/// `model` must be NULL or a live handle.
#[no_mangle]
pub unsafe extern "C" fn obf_model_parameter_count(model: *const ObfModel) -> usize {
    unsafe { model.as_ref() }.map_or(0, |m| m.inner.parameter_count())
}

/// Copy the flattened parameters into `out` (exactly `len` doubles).
///
/// # Safety
/// `model` must be a live handle; `out` must hold `len` doubles.
#[no_mangle]
pub unsafe extern "C" fn obf_model_get_parameters(model: *const ObfModel, out: *mut f64, len: usize) -> ObfStatus {
    guard(|| {
        let m = unsafe { ref_arg(model, "model") }?;
        let params = m.inner.get_parameters();
        check_len(params.len(), len)?;
        unsafe { slice_out(out, len, "out") }?.copy_from_slice(&params);
        Ok(())
    })
}

/// Class probabilities for one sample; `out` holds `num_classes` doubles.
///
/// # Safety
/// `model` must be a live handle; `features` must hold `dim` doubles and
/// `out` `num_classes` doubles.
#[no_mangle]
pub unsafe extern "C" fn obf_model_predict_proba(
    model: *const ObfModel,
    features: *const f64,
    dim: usize,
    out: *mut f64,
    num_classes: usize,
) -> ObfStatus {
    guard(|| {
        let m = unsafe { ref_arg(model, "model") }?;
        let x = unsafe { slice_arg(features, dim, "features") }?;
        let p = m.inner.predict_proba(x)?;
        check_len(p.len(), num_classes)?;
        unsafe { slice_out(out, num_classes, "out") }?.copy_from_slice(&p);
        Ok(())
    })
}

/// Most probable class for one sample.
///
/// # Safety
/// `model` must be a live handle; `features` must hold `dim` doubles;
/// `class_out` writable.
#[no_mangle]
pub unsafe extern "C" fn obf_model_predict(
    model: *const ObfModel,
    features: *const f64,
    dim: usize,
    class_out: *mut usize,
) -> ObfStatus {
    guard(|| {
        let m = unsafe { ref_arg(model, "model") }?;
        let x = unsafe { slice_arg(features, dim, "features") }?;
        let c = m.inner.predict(x)?;
        unsafe { write_out(class_out, c, "class_out") }
    })
}

/// Fraction of `dataset` the model classifies correctly.
///
/// # Safety
/// Both handles must be live; `out` writable.
#[no_mangle]
pub unsafe extern "C" fn obf_model_accuracy(model: *const ObfModel, dataset: *const ObfDataset, out: *mut f64) -> ObfStatus {
    guard(|| {
        let m = unsafe { ref_arg(model, "model") }?;
        let ds = unsafe { ref_arg(dataset, "dataset") }?;
        let acc = m.inner.accuracy(&ds.inner)?;
        unsafe { write_out(out, acc, "out") }
    })
}

/// Write `n_bits` payload bits (one byte per bit, nonzero = 1) into the
/// `k_bits` low mantissa bits of the parameters, returning a new model.
///
/// # Safety
/// `model` must be a live handle; `bits` must hold `n_bits` bytes; `out`
/// writable.
#[no_mangle]
pub unsafe extern "C" fn obf_lsb_encode(
    model: *const ObfModel,
    bits: *const u8,
    n_bits: usize,
    k_bits: u32,
    out: *mut *mut ObfModel,
) -> ObfStatus {
    guard(|| {
        let m = unsafe { ref_arg(model, "model") }?;
        let bits: Vec<bool> = unsafe { slice_arg(bits, n_bits, "bits") }?.iter().map(|b| *b != 0).collect();
        if out.is_null() {
            return Err(Failure::Null("out"));
        }
        let encoded = codec::lsb_encode_bits(&m.inner, &bits, k_bits)?;
        unsafe { write_out(out, new_model(encoded), "out") }
    })
}

/// Read `n_bits` bits back from the `k_bits` low mantissa bits; each byte of
/// `out_bits` becomes 0 or 1.
///
/// # Safety
/// `model` must be a live handle; `out_bits` must hold `n_bits` bytes.
#[no_mangle]
pub unsafe extern "C" fn obf_lsb_decode(model: *const ObfModel, n_bits: usize, k_bits: u32, out_bits: *mut u8) -> ObfStatus {
    guard(|| {
        let m = unsafe { ref_arg(model, "model") }?;
        let bits = codec::lsb_decode_bits(&m.inner, n_bits, k_bits)?;
        let out = unsafe { slice_out(out_bits, n_bits, "out_bits") }?;
        for (o, b) in out.iter_mut().zip(bits) {
            *o = u8::from(b);
        }
        Ok(())
    })
}

/// Signs of the first `n_bits` parameters as bits (zero counts as 1).
///
/// # Safety
/// `model` must be a live handle; `out_bits` must hold `n_bits` bytes.
#[no_mangle]
pub unsafe extern "C" fn obf_sign_decode(model: *const ObfModel, n_bits: usize, out_bits: *mut u8) -> ObfStatus {
    guard(|| {
        let m = unsafe { ref_arg(model, "model") }?;
        let bits = codec::sign_decode(&m.inner, n_bits)?;
        let out = unsafe { slice_out(out_bits, n_bits, "out_bits") }?;
        for (o, b) in out.iter_mut().zip(bits) {
            *o = u8::from(b);
        }
        Ok(())
    })
}

/// F1 score of a binary confusion matrix.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn obf_f1(tp: u64, fn_: u64, fp: u64, tn: u64, out: *mut f64) -> ObfStatus {
    guard(|| {
        let f1 = metrics::f1(&ConfusionMatrix::new(tp, fn_, fp, tn))?;
        unsafe { write_out(out, f1, "out") }
    })
}

/// Run an experiment from its JSON config on `threads` workers (0 =
/// automatic). When `out_dir` is non-NULL the report, curves and artifacts
/// are written there. The report JSON is returned in `report_out` and must be
/// released with [`obf_string_free`].
///
/// # Safety
/// `config_json` must be NUL-terminated; `out_dir` NULL or NUL-terminated;
/// `report_out` writable.
#[no_mangle]
pub unsafe extern "C" fn obf_run_experiment(
    config_json: *const c_char,
    out_dir: *const c_char,
    threads: usize,
    report_out: *mut *mut c_char,
) -> ObfStatus {
    guard(|| {
        let config = ExperimentConfig::from_json(unsafe { str_arg(config_json, "config_json") }?)?;
        if report_out.is_null() {
            return Err(Failure::Null("report_out"));
        }
        let report = harness::execute(&config, threads)?;
        if !out_dir.is_null() {
            report.write(unsafe { str_arg(out_dir, "out_dir") }?)?;
        }
        let json = CString::new(report.to_json()?).map_err(|e| Error::invalid("report", e.to_string()))?;
        unsafe { write_out(report_out, json.into_raw(), "report_out") }
    })
}
