//! C ABI over the `taafs` library.
//!
//! Every function returns a [`TaafsStatus`]. On failure the message is kept
//! per thread and read with [`taafs_last_error`]. Handles are opaque and must
//! be released with their matching `_free` function. Panics never cross the
//! boundary; they are reported as [`TaafsStatus::Panic`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::ptr;

use taafs::checkpoint::Checkpoint;
use taafs::{Basis, BasisSpec, Error, Family};

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TaafsStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    Io = 3,
    Checkpoint = 4,
    Dimension = 5,
    BufferTooSmall = 6,
    Panic = 7,
}

/// A trained model loaded from a checkpoint file.
pub struct TaafsModel {
    inner: Checkpoint,
}

/// A basis family evaluated on its domain.
pub struct TaafsBasis {
    inner: Basis,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

struct Failure(TaafsStatus, String);

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let status = match e {
            Error::Io { .. } => TaafsStatus::Io,
            Error::Checkpoint(_) => TaafsStatus::Checkpoint,
            Error::Dimension(_) => TaafsStatus::Dimension,
            _ => TaafsStatus::InvalidArgument,
        };
        Failure(status, e.to_string())
    }
}

fn fail(status: TaafsStatus, msg: impl Into<String>) -> Failure {
    Failure(status, msg.into())
}

fn set_last_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn guard(f: impl FnOnce() -> Result<(), Failure>) -> TaafsStatus {
    LAST_ERROR.with(|e| *e.borrow_mut() = None);
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => TaafsStatus::Ok,
        Ok(Err(Failure(status, msg))) => {
            set_last_error(msg);
            status
        }
        Err(payload) => {
            let msg = payload
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| payload.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "unknown panic".into());
            set_last_error(format!("panic: {msg}"));
            TaafsStatus::Panic
        }
    }
}

unsafe fn deref<'a, T>(p: *const T, what: &str) -> Result<&'a T, Failure> {
    p.as_ref().ok_or_else(|| fail(TaafsStatus::NullPointer, format!("{what} is null")))
}

unsafe fn out_ref<'a, T>(p: *mut T, what: &str) -> Result<&'a mut T, Failure> {
    p.as_mut().ok_or_else(|| fail(TaafsStatus::NullPointer, format!("{what} is null")))
}

unsafe fn input_slice<'a>(p: *const f64, len: usize, what: &str) -> Result<&'a [f64], Failure> {
    if len == 0 {
        return Ok(&[]);
    }
    if p.is_null() {
        return Err(fail(TaafsStatus::NullPointer, format!("{what} is null")));
    }
    Ok(std::slice::from_raw_parts(p, len))
}

unsafe fn output_slice<'a>(p: *mut f64, len: usize, need: usize, what: &str) -> Result<&'a mut [f64], Failure> {
    if len < need {
        return Err(fail(
            TaafsStatus::BufferTooSmall,
            format!("{what} holds {len} values, {need} needed"),
        ));
    }
    if need == 0 {
        return Ok(&mut []);
    }
    if p.is_null() {
        return Err(fail(TaafsStatus::NullPointer, format!("{what} is null")));
    }
    Ok(std::slice::from_raw_parts_mut(p, need))
}

unsafe fn c_str<'a>(p: *const c_char, what: &str) -> Result<&'a str, Failure> {
    let p = deref(p, what)?;
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| fail(TaafsStatus::InvalidArgument, format!("{what} is not UTF-8")))
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn taafs_version() -> *const c_char {
    static VERSION: &str = concat!(env!("CARGO_PKG_VERSION"), "\0");
    VERSION.as_ptr().cast()
}

/// Message for the last failed call on this thread, or NULL after a
/// successful call. Valid until the next call into the library on this thread.
#[no_mangle]
pub extern "C" fn taafs_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Loads a checkpoint written by `taafs train`.
///
/// # Safety
/// `path` must be a NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn taafs_model_load(path: *const c_char, out: *mut *mut TaafsModel) -> TaafsStatus {
    guard(|| {
        let out = out_ref(out, "out")?;
        *out = ptr::null_mut();
        let path = c_str(path, "path")?;
        let inner = Checkpoint::load(Path::new(path))?;
        *out = Box::into_raw(Box::new(TaafsModel { inner }));
        Ok(())
    })
}

/// Releases a model. NULL is ignored.
///
/// # Safety
/// `model` must come from [`taafs_model_load`] and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn taafs_model_free(model: *mut TaafsModel) {
    if !model.is_null() {
        let _ = catch_unwind(AssertUnwindSafe(|| drop(Box::from_raw(model))));
    }
}

/// Number of raw input features the model expects.
///
/// # Safety
/// `model` must be a live handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn taafs_model_input_dim(model: *const TaafsModel, out: *mut usize) -> TaafsStatus {
    guard(|| {
        *out_ref(out, "out")? = deref(model, "model")?.inner.stats.raw_dim();
        Ok(())
    })
}

/// Total trainable parameters: weights, biases and activation coefficients.
///
/// # Safety
/// `model` must be a live handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn taafs_model_param_count(model: *const TaafsModel, out: *mut usize) -> TaafsStatus {
    guard(|| {
        *out_ref(out, "out")? = deref(model, "model")?.inner.model.parameter_count().total;
        Ok(())
    })
}

/// Predicted energy, in dataset units, for one sample of raw features.
///
/// # Safety
/// `features` must point to `n_features` doubles and `out` be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn taafs_model_predict(
    model: *const TaafsModel,
    features: *const f64,
    n_features: usize,
    out: *mut f64,
) -> TaafsStatus {
    guard(|| {
        let model = deref(model, "model")?;
        let x = input_slice(features, n_features, "features")?;
        let out = out_ref(out, "out")?;
        *out = model.inner.predict_energy(x)?;
        Ok(())
    })
}

/// Forces `-dE/dx` with respect to each raw feature, written to `out`.
///
/// # Safety
/// `features` must point to `n_features` doubles and `out` to `out_len`
/// writable doubles.
#[no_mangle]
pub unsafe extern "C" fn taafs_model_forces(
    model: *const TaafsModel,
    features: *const f64,
    n_features: usize,
    out: *mut f64,
    out_len: usize,
) -> TaafsStatus {
    guard(|| {
        let model = deref(model, "model")?;
        let x = input_slice(features, n_features, "features")?;
        let forces = model.inner.predict_forces(x)?;
        output_slice(out, out_len, forces.len(), "out")?.copy_from_slice(&forces);
        Ok(())
    })
}

/// Creates a basis. `family` is a name such as `"bspline"` or `"chebyshev1"`.
/// A `degree` or `grid_count` of 0 keeps the family default.
///
/// # Safety
/// `family` must be a NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn taafs_basis_new(
    family: *const c_char,
    degree: usize,
    grid_count: usize,
    domain_lo: f64,
    domain_hi: f64,
    out: *mut *mut TaafsBasis,
) -> TaafsStatus {
    guard(|| {
        let out = out_ref(out, "out")?;
        *out = ptr::null_mut();
        let family: Family = c_str(family, "family")?.parse()?;
        let mut spec = BasisSpec::new(family).with_domain(domain_lo, domain_hi);
        if degree > 0 {
            spec = spec.with_degree(degree);
        }
        if grid_count > 0 {
            spec = spec.with_grid_count(grid_count);
        }
        let inner = Basis::new(spec)?;
        *out = Box::into_raw(Box::new(TaafsBasis { inner }));
        Ok(())
    })
}

/// Releases a basis. NULL is ignored.
///
/// # Safety
/// `basis` must come from [`taafs_basis_new`] and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn taafs_basis_free(basis: *mut TaafsBasis) {
    if !basis.is_null() {
        let _ = catch_unwind(AssertUnwindSafe(|| drop(Box::from_raw(basis))));
    }
}

/// Number of basis functions.
///
/// # Safety
/// `basis` must be a live handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn taafs_basis_len(basis: *const TaafsBasis, out: *mut usize) -> TaafsStatus {
    guard(|| {
        *out_ref(out, "out")? = deref(basis, "basis")?.inner.len();
        Ok(())
    })
}

/// Values of every basis function at `x`.
///
/// # Safety
/// `out` must point to `out_len` writable doubles.
#[no_mangle]
pub unsafe extern "C" fn taafs_basis_eval(
    basis: *const TaafsBasis,
    x: f64,
    out: *mut f64,
    out_len: usize,
) -> TaafsStatus {
    guard(|| {
        let basis = &deref(basis, "basis")?.inner;
        output_slice(out, out_len, basis.len(), "out")?.copy_from_slice(&basis.eval(x));
        Ok(())
    })
}

/// Derivatives of every basis function at `x`.
///
/// # Safety
/// `out` must point to `out_len` writable doubles.
#[no_mangle]
pub unsafe extern "C" fn taafs_basis_derivative(
    basis: *const TaafsBasis,
    x: f64,
    out: *mut f64,
    out_len: usize,
) -> TaafsStatus {
    guard(|| {
        let basis = &deref(basis, "basis")?.inner;
        output_slice(out, out_len, basis.len(), "out")?.copy_from_slice(&basis.derivative(x));
        Ok(())
    })
}
