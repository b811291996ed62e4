//! C interface to the `fblmnn` metric learner.
//!
//! Datasets and metrics cross the boundary as opaque handles that the caller
//! releases with the matching `*_free` function. Every fallible function
//! returns an [`FblmnnStatus`]; on failure a description is available from
//! [`fblmnn_last_error_message`] on the same thread. Panics never cross the
//! boundary and are reported as [`FblmnnStatus::Panic`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use fblmnn::dataset::{load_csv, stratified_folds, LabelColumn, LabeledDataset};
use fblmnn::eval::{cross_validate, knn_predict, EvalConfig, Method};
use fblmnn::feasibility::{triplet_feasibility, DEFAULT_R_CAP};
use fblmnn::linalg::SymMatrix;
use fblmnn::solver::{fit, Mode, SolverConfig};
use fblmnn::{Error, Metric};

/// Opaque labeled dataset.
pub struct FblmnnDataset(LabeledDataset);

/// Opaque Mahalanobis metric.
pub struct FblmnnMetric(Metric);

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FblmnnStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    DimensionMismatch = 3,
    NotPositiveSemidefinite = 4,
    MissingFile = 5,
    ParseError = 6,
    InvalidData = 7,
    NumericalFailure = 8,
    IoError = 9,
    Panic = 10,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FblmnnMode {
    Sp = 0,
    Mp = 1,
    Fb = 2,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FblmnnMethod {
    Knn = 0,
    SpLmnn = 1,
    MpLmnn = 2,
    FbLmnn = 3,
}

/// Solver settings; obtain defaults from [`fblmnn_solver_config_default`].
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FblmnnSolverConfig {
    pub mode: FblmnnMode,
    pub mu: f64,
    pub k: usize,
    pub passes: usize,
    pub max_iterations: usize,
    pub tolerance: f64,
    pub r_cap: f64,
    pub workers: usize,
    /// Nonzero to measure feasibility on the input coordinates in every pass.
    pub freeze_weights: bool,
}

impl From<FblmnnMode> for Mode {
    fn from(mode: FblmnnMode) -> Self {
        match mode {
            FblmnnMode::Sp => Mode::Sp,
            FblmnnMode::Mp => Mode::Mp,
            FblmnnMode::Fb => Mode::Fb,
        }
    }
}

impl FblmnnSolverConfig {
    fn from_rust(mode: FblmnnMode, cfg: &SolverConfig) -> Self {
        FblmnnSolverConfig {
            mode,
            mu: cfg.mu,
            k: cfg.k,
            passes: cfg.passes,
            max_iterations: cfg.max_iterations,
            tolerance: cfg.tolerance,
            r_cap: cfg.r_cap,
            workers: cfg.workers,
            freeze_weights: cfg.freeze_weights,
        }
    }

    fn to_rust(self) -> SolverConfig {
        SolverConfig {
            mu: self.mu,
            k: self.k,
            passes: self.passes,
            max_iterations: self.max_iterations,
            tolerance: self.tolerance,
            r_cap: self.r_cap,
            workers: self.workers,
            freeze_weights: self.freeze_weights,
            ..SolverConfig::for_mode(self.mode.into())
        }
    }
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_last_error(message: String) {
    let text = CString::new(message.replace('\0', " ")).expect("interior NULs were replaced");
    LAST_ERROR.with(|slot| *slot.borrow_mut() = Some(text));
}

fn clear_last_error() {
    LAST_ERROR.with(|slot| *slot.borrow_mut() = None);
}

struct Failure(FblmnnStatus, String);

impl From<Error> for Failure {
    fn from(err: Error) -> Self {
        let status = match &err {
            Error::DimensionMismatch { .. } => FblmnnStatus::DimensionMismatch,
            Error::NotPositiveSemidefinite { .. } => FblmnnStatus::NotPositiveSemidefinite,
            Error::MissingFile(_) => FblmnnStatus::MissingFile,
            Error::NonNumeric { .. } | Error::Malformed(_) | Error::Csv(_) | Error::Json(_) => {
                FblmnnStatus::ParseError
            }
            Error::EmptyDataset
            | Error::SingleClass
            | Error::LabelColumnNotFound(_)
            | Error::ClassTooSmall { .. }
            | Error::NonFinite => FblmnnStatus::InvalidData,
            Error::InvalidParameter(_) => FblmnnStatus::InvalidArgument,
            Error::NonFiniteObjective { .. } => FblmnnStatus::NumericalFailure,
            Error::Io(_) => FblmnnStatus::IoError,
        };
        Failure(status, err.to_string())
    }
}

fn null(what: &str) -> Failure {
    Failure(FblmnnStatus::NullPointer, format!("{what} is NULL"))
}

/// Runs `body`, converting errors and panics into a status code.
fn guard(body: impl FnOnce() -> Result<(), Failure>) -> FblmnnStatus {
    clear_last_error();
    match catch_unwind(AssertUnwindSafe(body)) {
        Ok(Ok(())) => FblmnnStatus::Ok,
        Ok(Err(Failure(status, message))) => {
            set_last_error(message);
            status
        }
        Err(payload) => {
            let message = payload
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| payload.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "unknown panic".into());
            set_last_error(format!("internal panic: {message}"));
            FblmnnStatus::Panic
        }
    }
}

unsafe fn slice<'a, T>(ptr: *const T, len: usize, what: &str) -> Result<&'a [T], Failure> {
    if len == 0 {
        return Ok(&[]);
    }
    if ptr.is_null() {
        return Err(null(what));
    }
    Ok(std::slice::from_raw_parts(ptr, len))
}

unsafe fn handle<'a, T>(ptr: *const T, what: &str) -> Result<&'a T, Failure> {
    ptr.as_ref().ok_or_else(|| null(what))
}

unsafe fn write_out<T>(out: *mut T, value: T, what: &str) -> Result<(), Failure> {
    if out.is_null() {
        return Err(null(what));
    }
    out.write(value);
    Ok(())
}

unsafe fn c_str<'a>(ptr: *const c_char, what: &str) -> Result<&'a str, Failure> {
    if ptr.is_null() {
        return Err(null(what));
    }
    CStr::from_ptr(ptr)
        .to_str()
        .map_err(|_| Failure(FblmnnStatus::InvalidArgument, format!("{what} is not valid UTF-8")))
}

fn checked_len(a: usize, b: usize) -> Result<usize, Failure> {
    a.checked_mul(b)
        .ok_or_else(|| Failure(FblmnnStatus::InvalidArgument, "size overflow".into()))
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn fblmnn_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Message describing the last failure on this thread, or NULL after a
/// success. The pointer stays valid until the next call into the library
/// from the same thread.
#[no_mangle]
pub extern "C" fn fblmnn_last_error_message() -> *const c_char {
    LAST_ERROR.with(|slot| slot.borrow().as_ref().map_or(ptr::null(), |s| s.as_ptr()))
}

/// Builds a dataset from `n × dim` row-major `points` and `n` labels in
/// `0..C`, where every class in that range occurs.
///
/// # Safety
/// `points` must hold `n * dim` values and `labels` `n` values; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn fblmnn_dataset_new(
    points: *const f64,
    n: usize,
    dim: usize,
    labels: *const u32,
    out: *mut *mut FblmnnDataset,
) -> FblmnnStatus {
    guard(|| {
        let pts = slice(points, checked_len(n, dim)?, "points")?;
        let lbl = slice(labels, n, "labels")?;
        let labels: Vec<usize> = lbl.iter().map(|&l| l as usize).collect();
        let classes = labels.iter().max().map_or(0, |&m| m + 1);
        let names = (0..classes).map(|c| c.to_string()).collect();
        let ds = LabeledDataset::from_flat(n, dim, pts.to_vec(), labels, names)?;
        write_out(out, Box::into_raw(Box::new(FblmnnDataset(ds))), "out")
    })
}

/// Loads a CSV file. `label_col` is a 0-based index or a header name.
///
/// # Safety
/// `path` and `label_col` must be NUL-terminated strings; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn fblmnn_dataset_load_csv(
    path: *const c_char,
    label_col: *const c_char,
    has_header: bool,
    out: *mut *mut FblmnnDataset,
) -> FblmnnStatus {
    guard(|| {
        let path = c_str(path, "path")?;
        let column: LabelColumn = c_str(label_col, "label_col")?
            .parse()
            .expect("label column parsing is infallible");
        let ds = load_csv(path, &column, has_header)?;
        write_out(out, Box::into_raw(Box::new(FblmnnDataset(ds))), "out")
    })
}

/// Releases a dataset; NULL is ignored.
///
/// # Safety
/// `ds` must come from this library and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn fblmnn_dataset_free(ds: *mut FblmnnDataset) {
    if !ds.is_null() {
        drop(Box::from_raw(ds));
    }
}

/// Number of points, or 0 for NULL.
///
/// # Safety
/// `ds` must be NULL or a live dataset handle.
#[no_mangle]
pub unsafe extern "C" fn fblmnn_dataset_len(ds: *const FblmnnDataset) -> usize {
    ds.as_ref().map_or(0, |d| d.0.n())
}

/// Feature dimension, or 0 for NULL.
///
/// # Safety
/// `ds` must be NULL or a live dataset handle.
#[no_mangle]
pub unsafe extern "C" fn fblmnn_dataset_dim(ds: *const FblmnnDataset) -> usize {
    ds.as_ref().map_or(0, |d| d.0.dim())
}

/// Number of classes, or 0 for NULL.
///
/// # Safety
/// `ds` must be NULL or a live dataset handle.
#[no_mangle]
pub unsafe extern "C" fn fblmnn_dataset_class_count(ds: *const FblmnnDataset) -> usize {
    ds.as_ref().map_or(0, |d| d.0.class_count())
}

/// Default solver settings for `mode`.
#[no_mangle]
pub extern "C" fn fblmnn_solver_config_default(mode: FblmnnMode) -> FblmnnSolverConfig {
    FblmnnSolverConfig::from_rust(mode, &SolverConfig::for_mode(mode.into()))
}

/// Learns a metric. `final_objective` may be NULL.
///
/// # Safety
/// `ds` and `cfg` must be valid pointers; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn fblmnn_fit(
    ds: *const FblmnnDataset,
    cfg: *const FblmnnSolverConfig,
    out: *mut *mut FblmnnMetric,
    final_objective: *mut f64,
) -> FblmnnStatus {
    guard(|| {
        let ds = handle(ds, "ds")?;
        let cfg = handle(cfg, "cfg")?.to_rust();
        if out.is_null() {
            return Err(null("out"));
        }
        let report = fit(&ds.0, &cfg)?;
        if !final_objective.is_null() {
            final_objective.write(report.final_objective);
        }
        write_out(out, Box::into_raw(Box::new(FblmnnMetric(report.metric))), "out")
    })
}

/// Builds a metric from `dim × dim` row-major entries; the matrix must be
/// symmetric and positive semidefinite.
///
/// # Safety
/// `entries` must hold `dim * dim` values; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn fblmnn_metric_new(
    entries: *const f64,
    dim: usize,
    out: *mut *mut FblmnnMetric,
) -> FblmnnStatus {
    guard(|| {
        if dim == 0 {
            return Err(Failure(FblmnnStatus::InvalidArgument, "dim must be positive".into()));
        }
        let values = slice(entries, checked_len(dim, dim)?, "entries")?;
        let rows: Vec<Vec<f64>> = values.chunks(dim).map(<[f64]>::to_vec).collect();
        let metric = Metric::new(SymMatrix::from_rows(&rows)?)?;
        write_out(out, Box::into_raw(Box::new(FblmnnMetric(metric))), "out")
    })
}

/// Identity metric of dimension `dim`, or NULL when `dim` is 0.
#[no_mangle]
pub extern "C" fn fblmnn_metric_identity(dim: usize) -> *mut FblmnnMetric {
    if dim == 0 {
        return ptr::null_mut();
    }
    Box::into_raw(Box::new(FblmnnMetric(Metric::identity(dim))))
}

/// Reads a metric text file.
///
/// # Safety
/// `path` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn fblmnn_metric_read(path: *const c_char, out: *mut *mut FblmnnMetric) -> FblmnnStatus {
    guard(|| {
        let metric = Metric::read(c_str(path, "path")?)?;
        write_out(out, Box::into_raw(Box::new(FblmnnMetric(metric))), "out")
    })
}

/// Writes a metric text file.
///
/// # Safety
/// `metric` must be a live handle and `path` a NUL-terminated string.
#[no_mangle]
pub unsafe extern "C" fn fblmnn_metric_write(metric: *const FblmnnMetric, path: *const c_char) -> FblmnnStatus {
    guard(|| {
        let metric = handle(metric, "metric")?;
        metric.0.write(c_str(path, "path")?)?;
        Ok(())
    })
}

/// Releases a metric; NULL is ignored.
///
/// # Safety
/// `metric` must come from this library and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn fblmnn_metric_free(metric: *mut FblmnnMetric) {
    if !metric.is_null() {
        drop(Box::from_raw(metric));
    }
}

/// Matrix dimension, or 0 for NULL.
///
/// # Safety
/// `metric` must be NULL or a live handle.
#[no_mangle]
pub unsafe extern "C" fn fblmnn_metric_dim(metric: *const FblmnnMetric) -> usize {
    metric.as_ref().map_or(0, |m| m.0.dim())
}

/// Copies the `dim × dim` row-major entries into `out`, which holds `len` values.
///
/// # Safety
/// `metric` must be a live handle and `out` writable for `len` values.
#[no_mangle]
pub unsafe extern "C" fn fblmnn_metric_entries(
    metric: *const FblmnnMetric,
    out: *mut f64,
    len: usize,
) -> FblmnnStatus {
    guard(|| {
        let metric = handle(metric, "metric")?;
        let values = metric.0.matrix().as_slice();
        if len < values.len() {
            return Err(Failure(
                FblmnnStatus::InvalidArgument,
                format!("buffer holds {len} values, {} needed", values.len()),
            ));
        }
        if out.is_null() {
            return Err(null("out"));
        }
        ptr::copy_nonoverlapping(values.as_ptr(), out, values.len());
        Ok(())
    })
}

/// Squared Mahalanobis distance between two `dim`-vectors.
///
/// # Safety
/// `metric` must be a live handle; `x` and `y` hold `dim` values; `out` writable.
#[no_mangle]
pub unsafe extern "C" fn fblmnn_mahalanobis(
    metric: *const FblmnnMetric,
    x: *const f64,
    y: *const f64,
    dim: usize,
    out: *mut f64,
) -> FblmnnStatus {
    guard(|| {
        let metric = handle(metric, "metric")?;
        let x = slice(x, dim, "x")?;
        let y = slice(y, dim, "y")?;
        let d = fblmnn::linalg::mahalanobis(metric.0.matrix(), x, y)?;
        write_out(out, d, "out")
    })
}

/// Label predicted for `query` by `k`-nearest-neighbor vote under `metric`.
///
/// # Safety
/// Handles must be live; `query` holds `dim` values; `out` writable.
#[no_mangle]
pub unsafe extern "C" fn fblmnn_knn_predict(
    train: *const FblmnnDataset,
    metric: *const FblmnnMetric,
    query: *const f64,
    dim: usize,
    k: usize,
    out: *mut u32,
) -> FblmnnStatus {
    guard(|| {
        let train = handle(train, "train")?;
        let metric = handle(metric, "metric")?;
        let query = slice(query, dim, "query")?;
        let label = knn_predict(&train.0, &metric.0, query, k)?;
        write_out(out, label as u32, "out")
    })
}

/// Feasibility measure of the triplet `(x_i, x_j, x_l)`. A non-positive
/// `r_cap` selects the default cap.
///
/// # Safety
/// The three points hold `dim` values each; `out` writable.
#[no_mangle]
pub unsafe extern "C" fn fblmnn_triplet_feasibility(
    x_i: *const f64,
    x_j: *const f64,
    x_l: *const f64,
    dim: usize,
    r_cap: f64,
    out: *mut f64,
) -> FblmnnStatus {
    guard(|| {
        if dim == 0 {
            return Err(Failure(FblmnnStatus::InvalidArgument, "dim must be positive".into()));
        }
        let xi = slice(x_i, dim, "x_i")?;
        let xj = slice(x_j, dim, "x_j")?;
        let xl = slice(x_l, dim, "x_l")?;
        if xi.iter().chain(xj).chain(xl).any(|v| !v.is_finite()) {
            return Err(Failure(FblmnnStatus::InvalidData, "points must be finite".into()));
        }
        let cap = if r_cap > 0.0 { r_cap } else { DEFAULT_R_CAP };
        write_out(out, triplet_feasibility(xi, xj, xl, cap), "out")
    })
}

/// Stratified cross-validated kNN accuracy. `cfg` may be NULL for the
/// method's defaults; its mode is replaced by the one `method` implies.
/// `stddev` may be NULL.
///
/// # Safety
/// `ds` must be a live handle; `mean` writable.
#[no_mangle]
pub unsafe extern "C" fn fblmnn_cross_validate(
    ds: *const FblmnnDataset,
    method: FblmnnMethod,
    cfg: *const FblmnnSolverConfig,
    folds: usize,
    seed: u64,
    standardize: bool,
    mean: *mut f64,
    stddev: *mut f64,
) -> FblmnnStatus {
    guard(|| {
        let ds = handle(ds, "ds")?;
        if mean.is_null() {
            return Err(null("mean"));
        }
        let mode = match method {
            FblmnnMethod::Knn => None,
            FblmnnMethod::SpLmnn => Some(FblmnnMode::Sp),
            FblmnnMethod::MpLmnn => Some(FblmnnMode::Mp),
            FblmnnMethod::FbLmnn => Some(FblmnnMode::Fb),
        };
        let method = match mode {
            None => Method::Knn,
            Some(mode) => {
                let base = match cfg.as_ref() {
                    Some(c) => FblmnnSolverConfig { mode, ..*c },
                    None => fblmnn_solver_config_default(mode),
                };
                Method::Lmnn(base.to_rust())
            }
        };
        let plan = stratified_folds(&ds.0, folds, seed)?;
        let eval = EvalConfig {
            standardize,
            ..EvalConfig::default()
        };
        let result = cross_validate(&ds.0, &plan, &method, &eval)?;
        mean.write(result.mean);
        if !stddev.is_null() {
            stddev.write(result.stddev);
        }
        Ok(())
    })
}
