//! C ABI for `woamlp`.
//!
//! Models are opaque `WoamlpModel` handles created by `woamlp_model_load`,
//! `woamlp_model_from_json` or `woamlp_train_csv` and released with
//! `woamlp_model_free`. Every fallible call returns a `WoamlpStatus`; on
//! failure `woamlp_last_error` returns a message for the calling thread.
//! Panics never cross the boundary: they are reported as
//! `WOAMLP_STATUS_PANIC`.

use std::cell::RefCell;
use std::ffi::{c_char, c_void, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use woamlp::cli::RunConfig;
use woamlp::feature_io;
use woamlp::metrics::{metrics_report, ConfusionMatrix};
use woamlp::trainer::{self, TrainedModel};
use woamlp::woa::{self, Bounds, WoaConfig};
use woamlp::{Error, ErrorKind};

/// Status codes; values 1 to 4 match the CLI exit codes.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum WoamlpStatus {
    Ok = 0,
    Usage = 1,
    Io = 2,
    Data = 3,
    Numeric = 4,
    NullPointer = 5,
    InvalidUtf8 = 6,
    BufferTooSmall = 7,
    Panic = 8,
}

impl From<ErrorKind> for WoamlpStatus {
    fn from(kind: ErrorKind) -> Self {
        match kind {
            ErrorKind::Usage => WoamlpStatus::Usage,
            ErrorKind::Io => WoamlpStatus::Io,
            ErrorKind::Data => WoamlpStatus::Data,
            ErrorKind::Numeric => WoamlpStatus::Numeric,
        }
    }
}

/// Opaque trained model.
pub struct WoamlpModel(TrainedModel);

#[repr(C)]
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct WoamlpMetrics {
    pub acc: f64,
    pub sen: f64,
    pub spe: f64,
    pub pre: f64,
    pub f1: f64,
    pub mcc: f64,
    pub kappa: f64,
}

/// Objective for `woamlp_woa_minimize`: `x` points to `dim` values.
pub type WoamlpObjective =
    Option<unsafe extern "C" fn(x: *const f64, dim: usize, user_data: *mut c_void) -> f64>;

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

struct Failure(WoamlpStatus, String);

impl<E: Into<Error>> From<E> for Failure {
    fn from(e: E) -> Self {
        let e = e.into();
        Failure(e.kind().into(), e.to_string())
    }
}

fn fail(status: WoamlpStatus, msg: impl Into<String>) -> Failure {
    Failure(status, msg.into())
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).expect("nul bytes removed");
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn guard(f: impl FnOnce() -> Result<(), Failure>) -> WoamlpStatus {
    LAST_ERROR.with(|e| *e.borrow_mut() = None);
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => WoamlpStatus::Ok,
        Ok(Err(Failure(status, msg))) => {
            set_error(msg);
            status
        }
        Err(_) => {
            set_error("internal panic".into());
            WoamlpStatus::Panic
        }
    }
}

unsafe fn c_str<'a>(p: *const c_char, what: &str) -> Result<&'a str, Failure> {
    if p.is_null() {
        return Err(fail(WoamlpStatus::NullPointer, format!("{what} is NULL")));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| fail(WoamlpStatus::InvalidUtf8, format!("{what} is not UTF-8")))
}

unsafe fn slice<'a>(p: *const f64, len: usize, what: &str) -> Result<&'a [f64], Failure> {
    if p.is_null() {
        return Err(fail(WoamlpStatus::NullPointer, format!("{what} is NULL")));
    }
    Ok(std::slice::from_raw_parts(p, len))
}

unsafe fn store_model(out: *mut *mut WoamlpModel, model: TrainedModel) {
    *out = Box::into_raw(Box::new(WoamlpModel(model)));
}

fn check_out<T>(out: *mut T, what: &str) -> Result<(), Failure> {
    if out.is_null() {
        return Err(fail(WoamlpStatus::NullPointer, format!("{what} is NULL")));
    }
    Ok(())
}

/// Message for the last failed call on this thread, or NULL. The pointer
/// stays valid until the next `woamlp_*` call on the same thread.
#[no_mangle]
pub extern "C" fn woamlp_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn woamlp_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Loads a model JSON file.
///
/// # Safety
/// `path` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn woamlp_model_load(
    path: *const c_char,
    out: *mut *mut WoamlpModel,
) -> WoamlpStatus {
    guard(|| {
        check_out(out, "out")?;
        let model = trainer::load_model(c_str(path, "path")?)?;
        store_model(out, model);
        Ok(())
    })
}

/// Parses a model from a JSON string.
///
/// # Safety
/// `json` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn woamlp_model_from_json(
    json: *const c_char,
    out: *mut *mut WoamlpModel,
) -> WoamlpStatus {
    guard(|| {
        check_out(out, "out")?;
        let model = TrainedModel::from_json(c_str(json, "json")?)?;
        store_model(out, model);
        Ok(())
    })
}

/// Writes the model as JSON.
///
/// # Safety
/// `model` must come from this library; `path` must be NUL-terminated.
#[no_mangle]
pub unsafe extern "C" fn woamlp_model_save(
    model: *const WoamlpModel,
    path: *const c_char,
) -> WoamlpStatus {
    guard(|| {
        let model = model
            .as_ref()
            .ok_or_else(|| fail(WoamlpStatus::NullPointer, "model is NULL"))?;
        trainer::save_model(&model.0, c_str(path, "path")?)?;
        Ok(())
    })
}

/// Releases a model. NULL is ignored.
///
/// # Safety
/// `model` must come from this library and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn woamlp_model_free(model: *mut WoamlpModel) {
    if !model.is_null() {
        drop(Box::from_raw(model));
    }
}

/// Feature width the model expects, or 0 for NULL.
///
/// # Safety
/// `model` must be NULL or come from this library.
#[no_mangle]
pub unsafe extern "C" fn woamlp_model_input_size(model: *const WoamlpModel) -> usize {
    model.as_ref().map_or(0, |m| m.0.input_size())
}

/// Number of output classes, or 0 for NULL.
///
/// # Safety
/// `model` must be NULL or come from this library.
#[no_mangle]
pub unsafe extern "C" fn woamlp_model_class_count(model: *const WoamlpModel) -> usize {
    model.as_ref().map_or(0, |m| m.0.class_names.len())
}

/// Class probabilities and argmax class index for one feature vector.
///
/// `probs_out` may be NULL; otherwise it must hold `probs_len >=
/// class_count` values. `class_out` may be NULL.
///
/// # Safety
/// Pointers must be valid for the stated lengths.
#[no_mangle]
pub unsafe extern "C" fn woamlp_model_predict(
    model: *const WoamlpModel,
    x: *const f64,
    len: usize,
    probs_out: *mut f64,
    probs_len: usize,
    class_out: *mut usize,
) -> WoamlpStatus {
    guard(|| {
        let model = model
            .as_ref()
            .ok_or_else(|| fail(WoamlpStatus::NullPointer, "model is NULL"))?;
        let pred = model.0.predict(slice(x, len, "x")?)?;
        if !probs_out.is_null() {
            if probs_len < pred.probabilities.len() {
                return Err(fail(
                    WoamlpStatus::BufferTooSmall,
                    format!(
                        "probs_out holds {probs_len}, need {}",
                        pred.probabilities.len()
                    ),
                ));
            }
            std::slice::from_raw_parts_mut(probs_out, pred.probabilities.len())
                .copy_from_slice(&pred.probabilities);
        }
        if !class_out.is_null() {
            *class_out = pred.class_index;
        }
        Ok(())
    })
}

/// Trains on every row of a feature CSV.
///
/// `config_json` uses the CLI run-config keys (`seed`, `hidden_layers`,
/// `hidden_activation`, `weight_bound`, `normalize`, `woa.*`); NULL means
/// defaults. Split-related keys are ignored.
///
/// # Safety
/// Strings must be NUL-terminated; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn woamlp_train_csv(
    data_path: *const c_char,
    config_json: *const c_char,
    out: *mut *mut WoamlpModel,
) -> WoamlpStatus {
    guard(|| {
        check_out(out, "out")?;
        let run: RunConfig = if config_json.is_null() {
            RunConfig::default()
        } else {
            serde_json::from_str(c_str(config_json, "config_json")?)
                .map_err(|e| fail(WoamlpStatus::Usage, format!("bad config: {e}")))?
        };
        let table = feature_io::load_feature_table(c_str(data_path, "data_path")?)?;
        let cfg = run
            .train_config(table.dim(), table.class_names.len())
            .map_err(|e| fail(e.kind.into(), e.message))?;
        let model = trainer::train(&cfg, &table)?;
        store_model(out, model);
        Ok(())
    })
}

/// The seven metrics for a binary confusion matrix.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn woamlp_metrics(
    true_pos: u64,
    false_neg: u64,
    false_pos: u64,
    true_neg: u64,
    out: *mut WoamlpMetrics,
) -> WoamlpStatus {
    guard(|| {
        check_out(out, "out")?;
        let r = metrics_report(&ConfusionMatrix::new(
            true_pos, false_neg, false_pos, true_neg, "positive",
        ))?;
        *out = WoamlpMetrics {
            acc: r.acc,
            sen: r.sen,
            spe: r.spe,
            pre: r.pre,
            f1: r.f1,
            mcc: r.mcc,
            kappa: r.kappa,
        };
        Ok(())
    })
}

struct CallbackObjective {
    f: unsafe extern "C" fn(*const f64, usize, *mut c_void) -> f64,
    user_data: *mut c_void,
}

impl CallbackObjective {
    fn call(&self, x: &[f64]) -> f64 {
        unsafe { (self.f)(x.as_ptr(), x.len(), self.user_data) }
    }
}

// Evaluation is serial (`parallel: false`), so the callback only ever runs
// on the calling thread.
unsafe impl Sync for CallbackObjective {}

/// Minimizes a C objective over the box `[lower, upper]` (each `dim`
/// values). The callback runs on the calling thread only. `best_out` must
/// hold `dim` values.
///
/// # Safety
/// Pointers must be valid for the stated lengths; `objective` must be safe
/// to call with `user_data`.
#[no_mangle]
pub unsafe extern "C" fn woamlp_woa_minimize(
    objective: WoamlpObjective,
    user_data: *mut c_void,
    dim: usize,
    lower: *const f64,
    upper: *const f64,
    population_size: usize,
    max_iterations: usize,
    spiral_shape: f64,
    seed: u64,
    best_out: *mut f64,
    fitness_out: *mut f64,
) -> WoamlpStatus {
    guard(|| {
        let f = objective.ok_or_else(|| fail(WoamlpStatus::NullPointer, "objective is NULL"))?;
        check_out(best_out, "best_out")?;
        let config = WoaConfig {
            population_size,
            max_iterations,
            bounds: Bounds {
                lower: slice(lower, dim, "lower")?.to_vec(),
                upper: slice(upper, dim, "upper")?.to_vec(),
            },
            spiral_shape,
            seed,
            parallel: false,
        };
        let cb = CallbackObjective { f, user_data };
        let state = woa::optimize(|x| cb.call(x), &config)?;
        std::slice::from_raw_parts_mut(best_out, dim).copy_from_slice(&state.best_position);
        if !fitness_out.is_null() {
            *fitness_out = state.best_fitness;
        }
        Ok(())
    })
}
