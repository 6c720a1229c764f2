//! C ABI over the `snn` library.
//!
//! Indexes and query results are opaque heap handles owned by the caller
//! and released with the matching `_free` function. Every fallible call
//! returns an [`SnnStatus`]; on failure a description of the last error on
//! the calling thread is available from [`snn_last_error_message`].
//! Points are passed as row-major `n × d` arrays of `double`.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use snn::{Backend, BlobModel, DbscanParams, PointMatrix, SnnError};

/// Status codes returned by every fallible function.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SnnStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    DimensionMismatch = 3,
    EmptyDataset = 4,
    Io = 5,
    Format = 6,
    Panic = 7,
}

/// Opaque index handle.
pub struct SnnIndex(snn::SnnIndex);

/// Opaque query result: hit ids (ascending) and their distances.
pub struct SnnResult {
    ids: Vec<usize>,
    dists: Vec<f64>,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn status_of(e: &SnnError) -> SnnStatus {
    match e {
        SnnError::EmptyDataset | SnnError::EmptyFile => SnnStatus::EmptyDataset,
        SnnError::DimensionMismatch { .. } | SnnError::LengthMismatch(..) | SnnError::ZeroDimension => {
            SnnStatus::DimensionMismatch
        }
        SnnError::Io(_) => SnnStatus::Io,
        SnnError::BadMagic(_)
        | SnnError::UnsupportedVersion(_)
        | SnnError::Truncated { .. }
        | SnnError::TrailingBytes(_)
        | SnnError::InvalidIndex(_)
        | SnnError::Csv(_)
        | SnnError::Parse { .. }
        | SnnError::RaggedRow { .. } => SnnStatus::Format,
        _ => SnnStatus::InvalidArgument,
    }
}

struct Fail(SnnStatus, String);

impl From<SnnError> for Fail {
    fn from(e: SnnError) -> Self {
        Fail(status_of(&e), e.to_string())
    }
}

fn null(what: &str) -> Fail {
    Fail(SnnStatus::NullPointer, format!("{what} is null"))
}

/// Runs `f`, converting errors and panics into a status code.
fn guard(f: impl FnOnce() -> Result<(), Fail>) -> SnnStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            LAST_ERROR.with(|e| *e.borrow_mut() = None);
            SnnStatus::Ok
        }
        Ok(Err(Fail(status, msg))) => {
            set_error(msg);
            status
        }
        Err(_) => {
            set_error("internal panic".into());
            SnnStatus::Panic
        }
    }
}

unsafe fn slice<'a>(p: *const f64, len: usize, what: &str) -> Result<&'a [f64], Fail> {
    if len == 0 {
        return Ok(&[]);
    }
    if p.is_null() {
        return Err(null(what));
    }
    Ok(std::slice::from_raw_parts(p, len))
}

unsafe fn matrix(data: *const f64, n: usize, d: usize) -> Result<PointMatrix, Fail> {
    let len = n
        .checked_mul(d)
        .ok_or_else(|| Fail(SnnStatus::InvalidArgument, "n * d overflows".into()))?;
    Ok(PointMatrix::new(n, d, slice(data, len, "data")?.to_vec())?)
}

unsafe fn path<'a>(p: *const c_char) -> Result<&'a str, Fail> {
    if p.is_null() {
        return Err(null("path"));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| Fail(SnnStatus::InvalidArgument, "path is not valid UTF-8".into()))
}

unsafe fn write_out<T>(out: *mut T, v: T, what: &str) -> Result<(), Fail> {
    if out.is_null() {
        return Err(null(what));
    }
    out.write(v);
    Ok(())
}

/// Message for the last failed call on this thread, or null. Valid until
/// the next call into this library from the same thread.
#[no_mangle]
pub extern "C" fn snn_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Static description of a status code; unknown codes get a generic text.
#[no_mangle]
pub extern "C" fn snn_status_string(status: i32) -> *const c_char {
    let s: &'static CStr = match status {
        0 => c"ok",
        1 => c"null pointer",
        2 => c"invalid argument",
        3 => c"dimension mismatch",
        4 => c"empty dataset",
        5 => c"i/o error",
        6 => c"malformed file",
        7 => c"internal panic",
        _ => c"unknown status",
    };
    s.as_ptr()
}

/// Builds an index over `n` points of dimension `d`.
///
/// # Safety
/// `data` must point to `n * d` readable doubles and `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn snn_index_build(data: *const f64, n: usize, d: usize, out: *mut *mut SnnIndex) -> SnnStatus {
    guard(|| {
        let points = matrix(data, n, d)?;
        let index = snn::SnnIndex::build(&points)?;
        write_out(out, Box::into_raw(Box::new(SnnIndex(index))), "out")
    })
}

/// Releases an index. Null is ignored.
///
/// # Safety
/// `index` must come from this library and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn snn_index_free(index: *mut SnnIndex) {
    if !index.is_null() {
        drop(Box::from_raw(index));
    }
}

/// Number of indexed points.
///
/// # Safety
/// `index` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn snn_index_len(index: *const SnnIndex, out: *mut usize) -> SnnStatus {
    guard(|| {
        let index = index.as_ref().ok_or_else(|| null("index"))?;
        write_out(out, index.0.len(), "out")
    })
}

/// Dimension of the indexed points.
///
/// # Safety
/// `index` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn snn_index_dim(index: *const SnnIndex, out: *mut usize) -> SnnStatus {
    guard(|| {
        let index = index.as_ref().ok_or_else(|| null("index"))?;
        write_out(out, index.0.dim(), "out")
    })
}

/// Inserts one point of dimension `d`; its id is written to `out_id`.
///
/// # Safety
/// `index` must be a live handle, `point` must hold `d` doubles and
/// `out_id` must be writable or null.
#[no_mangle]
pub unsafe extern "C" fn snn_index_append(
    index: *mut SnnIndex,
    point: *const f64,
    d: usize,
    out_id: *mut usize,
) -> SnnStatus {
    guard(|| {
        let index = index.as_mut().ok_or_else(|| null("index"))?;
        let id = index.0.append_point(slice(point, d, "point")?)?;
        if !out_id.is_null() {
            out_id.write(id);
        }
        Ok(())
    })
}

/// Writes the index to `path` in the binary index format.
///
/// # Safety
/// `index` must be a live handle and `path` a NUL-terminated string.
#[no_mangle]
pub unsafe extern "C" fn snn_index_save(index: *const SnnIndex, path: *const c_char) -> SnnStatus {
    guard(|| {
        let index = index.as_ref().ok_or_else(|| null("index"))?;
        Ok(snn::persist::save_index(&index.0, self::path(path)?)?)
    })
}

/// Loads an index saved by [`snn_index_save`] or the command-line tool.
///
/// # Safety
/// `path` must be a NUL-terminated string and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn snn_index_load(path: *const c_char, out: *mut *mut SnnIndex) -> SnnStatus {
    guard(|| {
        let index = snn::persist::load_index(self::path(path)?)?;
        write_out(out, Box::into_raw(Box::new(SnnIndex(index))), "out")
    })
}

/// All indexed points within Euclidean distance `radius` of `query`.
///
/// # Safety
/// `index` must be a live handle, `query` must hold `d` doubles and `out`
/// must be writable.
#[no_mangle]
pub unsafe extern "C" fn snn_query_radius(
    index: *const SnnIndex,
    query: *const f64,
    d: usize,
    radius: f64,
    out: *mut *mut SnnResult,
) -> SnnStatus {
    guard(|| {
        let index = index.as_ref().ok_or_else(|| null("index"))?;
        let hits = index.0.query_radius(slice(query, d, "query")?, radius)?.hits;
        let result = SnnResult {
            ids: hits.iter().map(|h| h.id).collect(),
            dists: hits.iter().map(|h| h.dist).collect(),
        };
        write_out(out, Box::into_raw(Box::new(result)), "out")
    })
}

/// Number of hits in a result; 0 for null.
///
/// # Safety
/// `result` must be a live handle or null.
#[no_mangle]
pub unsafe extern "C" fn snn_result_len(result: *const SnnResult) -> usize {
    result.as_ref().map_or(0, |r| r.ids.len())
}

/// Hit ids in ascending order, valid until the result is freed.
///
/// # Safety
/// `result` must be a live handle or null.
#[no_mangle]
pub unsafe extern "C" fn snn_result_ids(result: *const SnnResult) -> *const usize {
    result.as_ref().map_or(ptr::null(), |r| r.ids.as_ptr())
}

/// Hit distances, parallel to [`snn_result_ids`].
///
/// # Safety
/// `result` must be a live handle or null.
#[no_mangle]
pub unsafe extern "C" fn snn_result_dists(result: *const SnnResult) -> *const f64 {
    result.as_ref().map_or(ptr::null(), |r| r.dists.as_ptr())
}

/// Releases a result. Null is ignored.
///
/// # Safety
/// `result` must come from this library and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn snn_result_free(result: *mut SnnResult) {
    if !result.is_null() {
        drop(Box::from_raw(result));
    }
}

/// DBSCAN over `n` points. Writes one label per point into `labels`
/// (`-1` marks noise) and the cluster count into `clusters`.
/// `use_bruteforce` selects the exhaustive neighbor backend.
///
/// # Safety
/// `data` must hold `n * d` doubles, `labels` must have room for `n`
/// values and `clusters` must be writable or null.
#[no_mangle]
pub unsafe extern "C" fn snn_dbscan(
    data: *const f64,
    n: usize,
    d: usize,
    eps: f64,
    min_samples: usize,
    use_bruteforce: bool,
    labels: *mut i64,
    clusters: *mut usize,
) -> SnnStatus {
    guard(|| {
        let points = matrix(data, n, d)?;
        let backend = if use_bruteforce {
            Backend::BruteForce
        } else {
            Backend::Snn
        };
        let params = DbscanParams::new(eps, min_samples, backend)?;
        if labels.is_null() {
            return Err(null("labels"));
        }
        let result = snn::dbscan(&points, &params)?;
        std::slice::from_raw_parts_mut(labels, n).copy_from_slice(&result.labels);
        if !clusters.is_null() {
            clusters.write(result.clusters);
        }
        Ok(())
    })
}

/// Gaussian-blob model probabilities for offset `c`, radius `radius`,
/// elongation `s` and dimension `d`. Any output pointer may be null.
///
/// # Safety
/// Non-null output pointers must be writable.
#[no_mangle]
pub unsafe extern "C" fn snn_model(
    c: f64,
    radius: f64,
    s: f64,
    d: usize,
    p1: *mut f64,
    p2: *mut f64,
    ratio: *mut f64,
) -> SnnStatus {
    guard(|| {
        let model = BlobModel::new(s, d, c, radius)?;
        let r = snn::efficiency_ratio(&model)?;
        for (out, v) in [(p1, snn::p1(c, radius)), (p2, snn::p2(&model)), (ratio, r)] {
            if !out.is_null() {
                out.write(v);
            }
        }
        Ok(())
    })
}
