//! C ABI over the `symbreak` library.
//!
//! Datasets and trained networks cross the boundary as opaque handles that
//! must be released with the matching `*_free` function. Every fallible
//! call returns an [`SbStatus`]; on failure a description is available from
//! [`sb_last_error_message`] on the same thread. Signals are passed in their
//! real encoding: `n` values for real problems, `n` real parts followed by
//! `n` imaginary parts for complex ones.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::PathBuf;
use std::ptr;
use std::slice;

use symbreak::dataset::{generate, Dataset};
use symbreak::forward_model::{forward, SensingMatrix};
use symbreak::learners::{
    count_parameters_for, examples_from, train, Architecture, MlpModel, Regularization, TrainConfig,
};
use symbreak::metrics::{evaluate, rectified_error, RunInfo};
use symbreak::symmetry::{canonicalize, is_representative, Transform};
use symbreak::{Error, Field, Matrix, Signal};

/// Result codes shared by every entry point.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SbStatus {
    Ok = 0,
    NullPointer = 1,
    Contract = 2,
    Allocation = 3,
    BadMagic = 4,
    VersionMismatch = 5,
    Truncated = 6,
    NonFinite = 7,
    Malformed = 8,
    Divergence = 9,
    Io = 10,
    Usage = 11,
    InvalidArgument = 12,
    BufferTooSmall = 13,
    Panic = 14,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SbField {
    Real = 0,
    Complex = 1,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SbArchitecture {
    Nn = 0,
    Wnn = 1,
    Dnn = 2,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SbRegularization {
    None = 0,
    L1 = 1,
    L2 = 2,
    L1L2 = 3,
}

/// Symmetry element returned by [`sb_canonicalize`].
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SbTransform {
    Identity = 0,
    SignFlip = 1,
    Phase = 2,
}

/// Training options; start from [`sb_train_options_default`].
#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct SbTrainOptions {
    pub architecture: SbArchitecture,
    /// Nonzero: canonicalize training and validation targets first.
    pub break_symmetry: u8,
    pub max_epochs: usize,
    pub learning_rate: f64,
    pub patience: usize,
    pub batch_size: usize,
    pub regularization: SbRegularization,
    pub reg_lambda: f64,
    pub standardize_inputs: u8,
    pub seed: u64,
}

/// Opaque dataset handle.
pub struct SbDataset(Dataset);

/// Opaque trained-network handle.
pub struct SbModel(MlpModel);

enum FfiError {
    Lib(Error),
    Null(&'static str),
    Invalid(String),
    TooSmall { needed: usize, given: usize },
}

impl From<Error> for FfiError {
    fn from(e: Error) -> Self {
        FfiError::Lib(e)
    }
}

impl FfiError {
    fn status(&self) -> SbStatus {
        match self {
            FfiError::Null(_) => SbStatus::NullPointer,
            FfiError::Invalid(_) => SbStatus::InvalidArgument,
            FfiError::TooSmall { .. } => SbStatus::BufferTooSmall,
            FfiError::Lib(e) => match e.root() {
                Error::Contract(_) => SbStatus::Contract,
                Error::Allocation { .. } => SbStatus::Allocation,
                Error::BadMagic { .. } => SbStatus::BadMagic,
                Error::VersionMismatch { .. } => SbStatus::VersionMismatch,
                Error::Truncated(_) => SbStatus::Truncated,
                Error::NonFinite(_) => SbStatus::NonFinite,
                Error::Malformed(_) => SbStatus::Malformed,
                Error::Divergence { .. } => SbStatus::Divergence,
                Error::Io { .. } => SbStatus::Io,
                Error::Usage(_) => SbStatus::Usage,
                Error::Stage { .. } => unreachable!("root() strips stages"),
            },
        }
    }

    fn message(&self) -> String {
        match self {
            FfiError::Lib(e) => e.to_string(),
            FfiError::Null(what) => format!("null pointer passed for {what}"),
            FfiError::Invalid(msg) => msg.clone(),
            FfiError::TooSmall { needed, given } => {
                format!("output buffer holds {given} values but {needed} are needed")
            }
        }
    }
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_last_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).expect("NULs removed");
    LAST_ERROR.with(|slot| *slot.borrow_mut() = Some(c));
}

fn guard<F: FnOnce() -> Result<(), FfiError>>(f: F) -> SbStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            LAST_ERROR.with(|slot| *slot.borrow_mut() = None);
            SbStatus::Ok
        }
        Ok(Err(e)) => {
            set_last_error(e.message());
            e.status()
        }
        Err(payload) => {
            let msg = payload
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| payload.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "unknown panic".into());
            set_last_error(format!("panic: {msg}"));
            SbStatus::Panic
        }
    }
}

unsafe fn in_slice<'a>(
    ptr: *const f64,
    len: usize,
    what: &'static str,
) -> Result<&'a [f64], FfiError> {
    if len == 0 {
        return Ok(&[]);
    }
    if ptr.is_null() {
        return Err(FfiError::Null(what));
    }
    Ok(slice::from_raw_parts(ptr, len))
}

unsafe fn out_slice<'a>(
    ptr: *mut f64,
    len: usize,
    what: &'static str,
) -> Result<&'a mut [f64], FfiError> {
    if len == 0 {
        return Ok(&mut []);
    }
    if ptr.is_null() {
        return Err(FfiError::Null(what));
    }
    Ok(slice::from_raw_parts_mut(ptr, len))
}

unsafe fn out_ref<'a, T>(ptr: *mut T, what: &'static str) -> Result<&'a mut T, FfiError> {
    ptr.as_mut().ok_or(FfiError::Null(what))
}

unsafe fn handle<'a, T>(ptr: *const T, what: &'static str) -> Result<&'a T, FfiError> {
    ptr.as_ref().ok_or(FfiError::Null(what))
}

unsafe fn path_arg(ptr: *const c_char) -> Result<PathBuf, FfiError> {
    if ptr.is_null() {
        return Err(FfiError::Null("path"));
    }
    let s = CStr::from_ptr(ptr)
        .to_str()
        .map_err(|_| FfiError::Invalid("path is not valid UTF-8".into()))?;
    Ok(PathBuf::from(s))
}

fn copy_out(dst: &mut [f64], src: &[f64]) -> Result<(), FfiError> {
    if dst.len() < src.len() {
        return Err(FfiError::TooSmall {
            needed: src.len(),
            given: dst.len(),
        });
    }
    dst[..src.len()].copy_from_slice(src);
    Ok(())
}

fn field_of(f: SbField) -> Field {
    match f {
        SbField::Real => Field::Real,
        SbField::Complex => Field::Complex,
    }
}

fn sb_field(f: Field) -> SbField {
    match f {
        Field::Real => SbField::Real,
        Field::Complex => SbField::Complex,
    }
}

/// Message for the last failed call on this thread, or NULL after a
/// success. The pointer stays valid until the next call on this thread.
#[no_mangle]
pub extern "C" fn sb_last_error_message() -> *const c_char {
    LAST_ERROR.with(|slot| slot.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn sb_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Draws `count` samples of a fresh problem with `m` measurements of an
/// `n`-dimensional signal.
///
/// # Safety
/// `out` must be a valid pointer to writable storage for one handle.
#[no_mangle]
pub unsafe extern "C" fn sb_dataset_generate(
    field: SbField,
    n: usize,
    m: usize,
    count: usize,
    seed: u64,
    out: *mut *mut SbDataset,
) -> SbStatus {
    guard(|| {
        let out = out_ref(out, "out")?;
        let d = generate(field_of(field), n, m, count, seed)?;
        *out = Box::into_raw(Box::new(SbDataset(d)));
        Ok(())
    })
}

/// # Safety
/// `path` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn sb_dataset_load(
    path: *const c_char,
    out: *mut *mut SbDataset,
) -> SbStatus {
    guard(|| {
        let out = out_ref(out, "out")?;
        let d = Dataset::load(path_arg(path)?)?;
        *out = Box::into_raw(Box::new(SbDataset(d)));
        Ok(())
    })
}

/// # Safety
/// `dataset` must be a live handle; `path` a NUL-terminated string.
#[no_mangle]
pub unsafe extern "C" fn sb_dataset_save(
    dataset: *const SbDataset,
    path: *const c_char,
) -> SbStatus {
    guard(|| {
        let d = handle(dataset, "dataset")?;
        d.0.save(path_arg(path)?)?;
        Ok(())
    })
}

/// # Safety
/// `dataset` must be NULL or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn sb_dataset_free(dataset: *mut SbDataset) {
    if !dataset.is_null() {
        drop(Box::from_raw(dataset));
    }
}

/// Shape and flags of a dataset. Any output pointer may be NULL.
///
/// # Safety
/// `dataset` must be a live handle; non-NULL outputs must be writable.
#[no_mangle]
pub unsafe extern "C" fn sb_dataset_info(
    dataset: *const SbDataset,
    field: *mut SbField,
    n: *mut usize,
    m: *mut usize,
    count: *mut usize,
    canonicalized: *mut u8,
) -> SbStatus {
    guard(|| {
        let d = &handle(dataset, "dataset")?.0;
        if let Some(f) = field.as_mut() {
            *f = sb_field(d.field());
        }
        if let Some(v) = n.as_mut() {
            *v = d.n();
        }
        if let Some(v) = m.as_mut() {
            *v = d.m();
        }
        if let Some(v) = count.as_mut() {
            *v = d.len();
        }
        if let Some(v) = canonicalized.as_mut() {
            *v = d.canonicalized() as u8;
        }
        Ok(())
    })
}

/// Copies sample `index`: the real-encoded signal into `x` and the
/// measurements into `y`.
///
/// # Safety
/// `x` and `y` must point to at least `x_len` and `y_len` writable doubles.
#[no_mangle]
pub unsafe extern "C" fn sb_dataset_sample(
    dataset: *const SbDataset,
    index: usize,
    x: *mut f64,
    x_len: usize,
    y: *mut f64,
    y_len: usize,
) -> SbStatus {
    guard(|| {
        let d = &handle(dataset, "dataset")?.0;
        if index >= d.len() {
            return Err(FfiError::Invalid(format!(
                "sample {index} out of range (count {})",
                d.len()
            )));
        }
        copy_out(out_slice(x, x_len, "x")?, &d.xs()[index].to_real_encoding())?;
        copy_out(out_slice(y, y_len, "y")?, d.ys()[index].as_slice())?;
        Ok(())
    })
}

/// New dataset with every signal mapped to its orbit representative.
///
/// # Safety
/// `dataset` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn sb_dataset_apply_symmetry_breaking(
    dataset: *const SbDataset,
    out: *mut *mut SbDataset,
) -> SbStatus {
    guard(|| {
        let d = &handle(dataset, "dataset")?.0;
        let out = out_ref(out, "out")?;
        *out = Box::into_raw(Box::new(SbDataset(d.apply_symmetry_breaking()?)));
        Ok(())
    })
}

/// `y = |Ax|^2` for an explicit row-major `m x n` matrix. `a_im` is
/// ignored for real problems and required for complex ones.
///
/// # Safety
/// Matrix planes must hold `m * n` doubles, `x` the real encoding of an
/// `n`-vector, and `y` at least `m` writable doubles.
#[no_mangle]
pub unsafe extern "C" fn sb_forward(
    field: SbField,
    a_re: *const f64,
    a_im: *const f64,
    m: usize,
    n: usize,
    x: *const f64,
    y: *mut f64,
) -> SbStatus {
    guard(|| {
        let field = field_of(field);
        let re = in_slice(a_re, m * n, "a_re")?.to_vec();
        let a = match field {
            Field::Real => Matrix::real(m, n, re)?,
            Field::Complex => Matrix::complex(m, n, re, in_slice(a_im, m * n, "a_im")?.to_vec())?,
        };
        let x = Signal::from_real_encoding(field, in_slice(x, field.real_width(n), "x")?)?;
        let out = forward(&SensingMatrix::from_matrix(a, 0), &x)?;
        copy_out(out_slice(y, m, "y")?, out.as_slice())
    })
}

/// Maps `x` onto its orbit representative. `theta` receives the phase for
/// complex input (0 for real); `was_boundary` is set when the deciding
/// coordinate was zero. Optional outputs may be NULL.
///
/// # Safety
/// `x` and `x_canon` must each hold the real encoding of an `n`-vector.
#[no_mangle]
pub unsafe extern "C" fn sb_canonicalize(
    field: SbField,
    x: *const f64,
    n: usize,
    x_canon: *mut f64,
    transform: *mut SbTransform,
    theta: *mut f64,
    was_boundary: *mut u8,
) -> SbStatus {
    guard(|| {
        let field = field_of(field);
        let width = field.real_width(n);
        let signal = Signal::from_real_encoding(field, in_slice(x, width, "x")?)?;
        let r = canonicalize(&signal);
        copy_out(
            out_slice(x_canon, width, "x_canon")?,
            &r.x_canon.to_real_encoding(),
        )?;
        let (t, angle) = match r.transform {
            Transform::Identity => (SbTransform::Identity, 0.0),
            Transform::SignFlip => (SbTransform::SignFlip, 0.0),
            Transform::Phase(a) => (SbTransform::Phase, a),
        };
        if let Some(p) = transform.as_mut() {
            *p = t;
        }
        if let Some(p) = theta.as_mut() {
            *p = angle;
        }
        if let Some(p) = was_boundary.as_mut() {
            *p = r.was_boundary as u8;
        }
        Ok(())
    })
}

/// # Safety
/// `x` must hold the real encoding of an `n`-vector; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn sb_is_representative(
    field: SbField,
    x: *const f64,
    n: usize,
    out: *mut u8,
) -> SbStatus {
    guard(|| {
        let field = field_of(field);
        let signal = Signal::from_real_encoding(field, in_slice(x, field.real_width(n), "x")?)?;
        *out_ref(out, "out")? = is_representative(&signal) as u8;
        Ok(())
    })
}

/// Symmetry-rectified squared error divided by `n`.
///
/// # Safety
/// `x_hat` and `x` must hold real encodings of `n`-vectors.
#[no_mangle]
pub unsafe extern "C" fn sb_rectified_error(
    field: SbField,
    x_hat: *const f64,
    x: *const f64,
    n: usize,
    out: *mut f64,
) -> SbStatus {
    guard(|| {
        let field = field_of(field);
        let width = field.real_width(n);
        let a = Signal::from_real_encoding(field, in_slice(x_hat, width, "x_hat")?)?;
        let b = Signal::from_real_encoding(field, in_slice(x, width, "x")?)?;
        *out_ref(out, "out")? = rectified_error(&a, &b)?;
        Ok(())
    })
}

/// `Σ (d_in + 1) d_out` over consecutive entries of `dims`.
///
/// # Safety
/// `dims` must hold `len` values; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn sb_count_parameters(
    dims: *const usize,
    len: usize,
    out: *mut usize,
) -> SbStatus {
    guard(|| {
        if dims.is_null() {
            return Err(FfiError::Null("dims"));
        }
        *out_ref(out, "out")? = count_parameters_for(slice::from_raw_parts(dims, len));
        Ok(())
    })
}

#[no_mangle]
pub extern "C" fn sb_train_options_default() -> SbTrainOptions {
    let d = TrainConfig::default();
    SbTrainOptions {
        architecture: SbArchitecture::Nn,
        break_symmetry: 1,
        max_epochs: d.max_epochs,
        learning_rate: d.learning_rate,
        patience: d.patience,
        batch_size: d.batch_size,
        regularization: SbRegularization::None,
        reg_lambda: d.reg_lambda,
        standardize_inputs: d.standardize_inputs as u8,
        seed: d.seed,
    }
}

/// Splits `dataset` with `split_seed`, trains on the training part and
/// returns the network with the best validation loss.
///
/// # Safety
/// `dataset` must be a live handle, `options` readable, `out` writable.
#[no_mangle]
pub unsafe extern "C" fn sb_train(
    dataset: *const SbDataset,
    split_seed: u64,
    options: *const SbTrainOptions,
    out: *mut *mut SbModel,
) -> SbStatus {
    guard(|| {
        let d = &handle(dataset, "dataset")?.0;
        let o = *handle(options, "options")?;
        let out = out_ref(out, "out")?;
        let arch = match o.architecture {
            SbArchitecture::Nn => Architecture::Nn,
            SbArchitecture::Wnn => Architecture::Wnn,
            SbArchitecture::Dnn => Architecture::Dnn,
        };
        let cfg = TrainConfig {
            max_epochs: o.max_epochs,
            learning_rate: o.learning_rate,
            patience: o.patience,
            batch_size: o.batch_size,
            reg: match o.regularization {
                SbRegularization::None => Regularization::None,
                SbRegularization::L1 => Regularization::L1,
                SbRegularization::L2 => Regularization::L2,
                SbRegularization::L1L2 => Regularization::L1L2,
            },
            reg_lambda: o.reg_lambda,
            standardize_inputs: o.standardize_inputs != 0,
            seed: o.seed,
        };
        let split = d.split(split_seed)?;
        let canon = o.break_symmetry != 0;
        let train_ex = examples_from(d, &split.train, canon)?;
        let val_ex = examples_from(d, &split.val, canon)?;
        let model = MlpModel::new(d.field(), &arch.dims(d.field(), d.n(), d.m()), o.seed)?;
        let (model, _) = train(model, &train_ex, &val_ex, &cfg)?;
        *out = Box::into_raw(Box::new(SbModel(model)));
        Ok(())
    })
}

/// Mean rectified error of `model` on the raw test part of `dataset`.
///
/// # Safety
/// Both handles must be live; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn sb_evaluate(
    model: *const SbModel,
    dataset: *const SbDataset,
    split_seed: u64,
    out: *mut f64,
) -> SbStatus {
    guard(|| {
        let model = &handle(model, "model")?.0;
        let d = &handle(dataset, "dataset")?.0;
        let out = out_ref(out, "out")?;
        let split = d.split(split_seed)?;
        let info = RunInfo {
            field: d.field(),
            n: d.n(),
            m: d.m(),
            model: "ffi".into(),
            variant: "-".into(),
            samples: d.len(),
            seed: split_seed,
        };
        *out = evaluate(model, d, &split.test, info)?.mean_error;
        Ok(())
    })
}

/// # Safety
/// `path` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn sb_model_load(path: *const c_char, out: *mut *mut SbModel) -> SbStatus {
    guard(|| {
        let out = out_ref(out, "out")?;
        let model = MlpModel::load(path_arg(path)?)?;
        *out = Box::into_raw(Box::new(SbModel(model)));
        Ok(())
    })
}

/// # Safety
/// `model` must be a live handle; `path` a NUL-terminated string.
#[no_mangle]
pub unsafe extern "C" fn sb_model_save(model: *const SbModel, path: *const c_char) -> SbStatus {
    guard(|| {
        handle(model, "model")?.0.save(path_arg(path)?)?;
        Ok(())
    })
}

/// # Safety
/// `model` must be NULL or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn sb_model_free(model: *mut SbModel) {
    if !model.is_null() {
        drop(Box::from_raw(model));
    }
}

/// Copies the layer dimensions into `dims` (capacity `cap`) and stores
/// their number in `len`. With `cap` too small only `len` is written and
/// `BufferTooSmall` is returned.
///
/// # Safety
/// `model` must be live, `dims` must hold `cap` values, `len` writable.
#[no_mangle]
pub unsafe extern "C" fn sb_model_dims(
    model: *const SbModel,
    dims: *mut usize,
    cap: usize,
    len: *mut usize,
) -> SbStatus {
    guard(|| {
        let model = &handle(model, "model")?.0;
        let len = out_ref(len, "len")?;
        *len = model.dims().len();
        if cap < model.dims().len() {
            return Err(FfiError::TooSmall {
                needed: model.dims().len(),
                given: cap,
            });
        }
        if dims.is_null() {
            return Err(FfiError::Null("dims"));
        }
        slice::from_raw_parts_mut(dims, cap)[..model.dims().len()].copy_from_slice(model.dims());
        Ok(())
    })
}

/// Runs the network on one measurement vector.
///
/// # Safety
/// `y` must hold `y_len` doubles, `x_hat` `x_len` writable doubles.
#[no_mangle]
pub unsafe extern "C" fn sb_model_predict(
    model: *const SbModel,
    y: *const f64,
    y_len: usize,
    x_hat: *mut f64,
    x_len: usize,
) -> SbStatus {
    guard(|| {
        let model = &handle(model, "model")?.0;
        let pred = model.forward(in_slice(y, y_len, "y")?)?;
        copy_out(out_slice(x_hat, x_len, "x_hat")?, &pred)
    })
}
