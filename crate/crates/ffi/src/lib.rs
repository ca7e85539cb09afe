//! C ABI for the Chosen Path index.
//!
//! Every function returns a [`CpStatus`]; results come back through out
//! pointers. On failure a message is available from [`cp_last_error`] until
//! the next call on the same thread. Indexes are opaque handles released
//! with [`cp_index_free`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use chosen_path::{ChosenPathParams, CpIndex, Error, MeasureKind, SparseSet};

/// Status codes; zero is success, errors are negative.
#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CpStatus {
    Ok = 0,
    NullPointer = -1,
    InvalidArgument = -2,
    UnsortedSet = -3,
    EmptyPoint = -4,
    NoPoints = -5,
    Io = -6,
    Snapshot = -7,
    Undefined = -8,
    Panic = -9,
}

/// Similarity measures accepted by [`cp_similarity`].
#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CpMeasure {
    BraunBlanquet = 0,
    Jaccard = 1,
    Cosine = 2,
    NormalizedHamming = 3,
}

impl From<CpMeasure> for MeasureKind {
    fn from(m: CpMeasure) -> Self {
        match m {
            CpMeasure::BraunBlanquet => MeasureKind::BraunBlanquet,
            CpMeasure::Jaccard => MeasureKind::Jaccard,
            CpMeasure::Cosine => MeasureKind::Cosine,
            CpMeasure::NormalizedHamming => MeasureKind::NormalizedHamming,
        }
    }
}

/// Opaque index handle.
pub struct CpIndexHandle {
    inner: CpIndex,
}

/// Outcome of one query. `found` is 1 when `id` and `similarity` are set.
#[repr(C)]
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct CpQueryResult {
    pub found: i32,
    pub id: u32,
    pub similarity: f64,
    pub candidates_scanned: u64,
    pub buckets_probed: u64,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(message: String) {
    let c = CString::new(message.replace('\0', " ")).expect("nul bytes removed");
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn status_of(e: &Error) -> CpStatus {
    match e {
        Error::UnsortedSet { .. } => CpStatus::UnsortedSet,
        Error::EmptyPoint { .. } => CpStatus::EmptyPoint,
        Error::NoPoints => CpStatus::NoPoints,
        Error::Io(_) => CpStatus::Io,
        Error::Snapshot(_) => CpStatus::Snapshot,
        Error::UndefinedSimilarity => CpStatus::Undefined,
        _ => CpStatus::InvalidArgument,
    }
}

struct Fail(CpStatus, String);

impl From<Error> for Fail {
    fn from(e: Error) -> Self {
        Fail(status_of(&e), e.to_string())
    }
}

fn null(what: &str) -> Fail {
    Fail(CpStatus::NullPointer, format!("{what} is null"))
}

fn guard(f: impl FnOnce() -> Result<(), Fail>) -> CpStatus {
    LAST_ERROR.with(|e| *e.borrow_mut() = None);
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => CpStatus::Ok,
        Ok(Err(Fail(status, message))) => {
            set_error(message);
            status
        }
        Err(_) => {
            set_error("internal panic".into());
            CpStatus::Panic
        }
    }
}

/// # Safety
/// `ptr` must point to `len` readable values unless `len` is zero.
unsafe fn slice<'a, T>(ptr: *const T, len: usize, what: &str) -> Result<&'a [T], Fail> {
    if len == 0 {
        Ok(&[])
    } else if ptr.is_null() {
        Err(null(what))
    } else {
        Ok(std::slice::from_raw_parts(ptr, len))
    }
}

unsafe fn set_from(ptr: *const u32, len: usize, what: &str) -> Result<SparseSet, Fail> {
    Ok(SparseSet::new(slice(ptr, len, what)?.to_vec())?)
}

unsafe fn path_arg(path: *const c_char) -> Result<String, Fail> {
    if path.is_null() {
        return Err(null("path"));
    }
    CStr::from_ptr(path)
        .to_str()
        .map(str::to_owned)
        .map_err(|_| Fail(CpStatus::InvalidArgument, "path is not valid UTF-8".into()))
}

/// Message for the last failed call on this thread, or null. The pointer
/// stays valid until the next call on the same thread.
#[no_mangle]
pub extern "C" fn cp_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn cp_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Builds an index over `n_points` sets stored back to back in `elements`;
/// point `i` is `elements[offsets[i] .. offsets[i + 1]]`, so `offsets` has
/// `n_points + 1` entries. Each set must be strictly increasing. `reps = 0`
/// selects the default repetition count.
///
/// # Safety
/// Pointers must be valid for the lengths implied above; `out` must be
/// writable.
#[no_mangle]
pub unsafe extern "C" fn cp_index_build(
    elements: *const u32,
    offsets: *const usize,
    n_points: usize,
    b1: f64,
    b2: f64,
    reps: usize,
    seed: u64,
    out: *mut *mut CpIndexHandle,
) -> CpStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        let offsets = slice(offsets, n_points + 1, "offsets")?;
        let total = *offsets.last().expect("n_points + 1 >= 1");
        if offsets.windows(2).any(|w| w[0] > w[1]) || offsets[0] != 0 {
            return Err(Fail(CpStatus::InvalidArgument, "offsets must start at 0 and be non-decreasing".into()));
        }
        let elements = slice(elements, total, "elements")?;
        let points = offsets
            .windows(2)
            .map(|w| SparseSet::new(elements[w[0]..w[1]].to_vec()))
            .collect::<Result<Vec<_>, _>>()?;
        let inner = if reps == 0 {
            CpIndex::build(points, b1, b2, seed)?
        } else {
            CpIndex::build_with_reps(points, b1, b2, reps, seed)?
        };
        *out = Box::into_raw(Box::new(CpIndexHandle { inner }));
        Ok(())
    })
}

/// Queries with a strictly increasing set of `len` elements.
///
/// # Safety
/// `index` must come from this library; `query` must hold `len` values;
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn cp_index_query(
    index: *const CpIndexHandle,
    query: *const u32,
    len: usize,
    out: *mut CpQueryResult,
) -> CpStatus {
    guard(|| {
        let index = index.as_ref().ok_or_else(|| null("index"))?;
        if out.is_null() {
            return Err(null("out"));
        }
        let q = set_from(query, len, "query")?;
        let o = index.inner.query(&q)?;
        *out = CpQueryResult {
            found: i32::from(o.found.is_some()),
            id: o.found.unwrap_or(0),
            similarity: o.similarity.unwrap_or(0.0),
            candidates_scanned: o.candidates_scanned,
            buckets_probed: o.buckets_probed,
        };
        Ok(())
    })
}

/// Number of indexed points.
///
/// # Safety
/// `index` must come from this library; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn cp_index_len(index: *const CpIndexHandle, out: *mut usize) -> CpStatus {
    guard(|| {
        let index = index.as_ref().ok_or_else(|| null("index"))?;
        if out.is_null() {
            return Err(null("out"));
        }
        *out = index.inner.len();
        Ok(())
    })
}

/// Writes a snapshot to `path`.
///
/// # Safety
/// `index` must come from this library; `path` must be a NUL-terminated
/// string.
#[no_mangle]
pub unsafe extern "C" fn cp_index_save(index: *const CpIndexHandle, path: *const c_char) -> CpStatus {
    guard(|| {
        let index = index.as_ref().ok_or_else(|| null("index"))?;
        index.inner.save(path_arg(path)?)?;
        Ok(())
    })
}

/// Loads a snapshot written by [`cp_index_save`] or the command-line tool.
///
/// # Safety
/// `path` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn cp_index_load(path: *const c_char, out: *mut *mut CpIndexHandle) -> CpStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        let inner = CpIndex::load(path_arg(path)?)?;
        *out = Box::into_raw(Box::new(CpIndexHandle { inner }));
        Ok(())
    })
}

/// Releases an index. Null is ignored.
///
/// # Safety
/// `index` must come from this library and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn cp_index_free(index: *mut CpIndexHandle) {
    if !index.is_null() {
        drop(Box::from_raw(index));
    }
}

/// Similarity of two strictly increasing sets.
///
/// # Safety
/// `x` and `y` must hold `x_len` and `y_len` values; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn cp_similarity(
    measure: CpMeasure,
    x: *const u32,
    x_len: usize,
    y: *const u32,
    y_len: usize,
    out: *mut f64,
) -> CpStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        let (x, y) = (set_from(x, x_len, "x")?, set_from(y, y_len, "y")?);
        *out = MeasureKind::from(measure).similarity(&x, &y)?;
        Ok(())
    })
}

/// `ln(1/b1) / ln(1/b2)` for `0 < b2 < b1 < 1`.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn cp_rho(b1: f64, b2: f64, out: *mut f64) -> CpStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        if !(0.0 < b2 && b2 < b1 && b1 < 1.0) {
            return Err(Fail(CpStatus::InvalidArgument, format!("need 0 < b2 < b1 < 1, got {b1}, {b2}")));
        }
        *out = ChosenPathParams::rho(b1, b2);
        Ok(())
    })
}
