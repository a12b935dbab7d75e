//! C ABI over the dtud library.
//!
//! Objects cross the boundary as opaque handles that the caller releases
//! with the matching `*_free` function. Every fallible call returns a
//! [`DtudStatus`]; on failure [`dtud_last_error`] describes the cause.
//! Strings returned to the caller are released with [`dtud_string_free`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use dtud::morph::{apply_morph, fit_morph_regularized, ControlPointSet, MorphMap};
use dtud::tree::{build_tree, classify, TreeConfig};
use dtud::uncertain::{load_dataset, make_marginal, Dataset, UncertainTuple};
use dtud::Error;

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DtudStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidString = 2,
    Io = 10,
    Ingestion = 11,
    Format = 12,
    Construction = 20,
    Schema = 21,
    Selection = 30,
    InvalidParameter = 40,
    Conditioning = 41,
    Panic = 99,
}

impl From<&Error> for DtudStatus {
    fn from(e: &Error) -> Self {
        match e {
            Error::Io { .. } => DtudStatus::Io,
            Error::Ingestion { .. } => DtudStatus::Ingestion,
            Error::Json(_) | Error::Format(_) | Error::InconsistentCriteria(_) => DtudStatus::Format,
            Error::Schema(_) | Error::Index { .. } => DtudStatus::Schema,
            Error::EmptyDataset | Error::InvalidSplit(_) | Error::Construction(_) => {
                DtudStatus::Construction
            }
            Error::Selection(_) | Error::InconsistentBranch(_) => DtudStatus::Selection,
            Error::Conditioning { .. } => DtudStatus::Conditioning,
            Error::InvalidParameter(_) | Error::DegenerateCurve(_) => DtudStatus::InvalidParameter,
        }
    }
}

/// Training data loaded from CSV.
pub struct DtudDataset {
    inner: Dataset,
}

/// A trained or deserialised tree.
pub struct DtudTree {
    inner: dtud::tree::DtudTree,
}

/// A fitted thin-plate-spline morphing map.
pub struct DtudMorphMap {
    inner: MorphMap,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).expect("nul bytes replaced");
    LAST_ERROR.with(|e| *e.borrow_mut() = c);
}

fn fail(status: DtudStatus, msg: impl Into<String>) -> DtudStatus {
    set_error(msg.into());
    status
}

fn guard(f: impl FnOnce() -> Result<(), DtudStatus>) -> DtudStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            set_error(String::new());
            DtudStatus::Ok
        }
        Ok(Err(s)) => s,
        Err(_) => fail(DtudStatus::Panic, "internal panic"),
    }
}

fn lib(e: Error) -> DtudStatus {
    let s = DtudStatus::from(&e);
    fail(s, e.to_string())
}

unsafe fn str_arg<'a>(p: *const c_char, what: &str) -> Result<&'a str, DtudStatus> {
    if p.is_null() {
        return Err(fail(DtudStatus::NullPointer, format!("{what} is null")));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| fail(DtudStatus::InvalidString, format!("{what} is not UTF-8")))
}

unsafe fn ref_arg<'a, T>(p: *const T, what: &str) -> Result<&'a T, DtudStatus> {
    p.as_ref()
        .ok_or_else(|| fail(DtudStatus::NullPointer, format!("{what} is null")))
}

unsafe fn slice_arg<'a>(p: *const f64, len: usize, what: &str) -> Result<&'a [f64], DtudStatus> {
    if p.is_null() {
        return Err(fail(DtudStatus::NullPointer, format!("{what} is null")));
    }
    Ok(std::slice::from_raw_parts(p, len))
}

fn out_arg<T>(p: *mut T) -> Result<(), DtudStatus> {
    if p.is_null() {
        Err(fail(DtudStatus::NullPointer, "output pointer is null"))
    } else {
        Ok(())
    }
}

fn points(flat: &[f64]) -> Vec<[f64; 3]> {
    flat.chunks_exact(3).map(|c| [c[0], c[1], c[2]]).collect()
}

/// Message of the last failed call on this thread; empty after a success.
/// The pointer stays valid until the next call on the same thread.
#[no_mangle]
pub extern "C" fn dtud_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn dtud_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// # Safety
/// `s` must come from this library or be null.
#[no_mangle]
pub unsafe extern "C" fn dtud_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Loads a labeled CSV (attribute columns, label last) with relative
/// deviation `uncertainty` on every attribute.
///
/// # Safety
/// `path` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn dtud_dataset_load(
    path: *const c_char,
    uncertainty: f64,
    out: *mut *mut DtudDataset,
) -> DtudStatus {
    guard(|| {
        out_arg(out)?;
        let path = str_arg(path, "path")?;
        let inner = load_dataset(path, uncertainty, None).map_err(lib)?;
        *out = Box::into_raw(Box::new(DtudDataset { inner }));
        Ok(())
    })
}

/// Number of tuples, or 0 for a null handle.
///
/// # Safety
/// `ds` must be a live handle or null.
#[no_mangle]
pub unsafe extern "C" fn dtud_dataset_len(ds: *const DtudDataset) -> usize {
    ds.as_ref().map_or(0, |d| d.inner.len())
}

/// # Safety
/// `ds` must be a handle from this library or null; it is invalid afterwards.
#[no_mangle]
pub unsafe extern "C" fn dtud_dataset_free(ds: *mut DtudDataset) {
    if !ds.is_null() {
        drop(Box::from_raw(ds));
    }
}

/// Trains a tree. `n_split_points` candidate thresholds are tried per
/// attribute at every node; paths hold at most `max_layers` splits.
///
/// # Safety
/// `ds` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn dtud_tree_build(
    ds: *const DtudDataset,
    max_layers: usize,
    n_split_points: usize,
    out: *mut *mut DtudTree,
) -> DtudStatus {
    guard(|| {
        out_arg(out)?;
        let ds = ref_arg(ds, "dataset")?;
        let cfg = TreeConfig {
            max_layers,
            n_split_points,
            ..TreeConfig::default()
        };
        let inner = build_tree(&ds.inner, &cfg).map_err(lib)?;
        *out = Box::into_raw(Box::new(DtudTree { inner }));
        Ok(())
    })
}

/// # Safety
/// `json` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn dtud_tree_from_json(json: *const c_char, out: *mut *mut DtudTree) -> DtudStatus {
    guard(|| {
        out_arg(out)?;
        let text = str_arg(json, "json")?;
        let inner = dtud::tree::DtudTree::from_json(text).map_err(lib)?;
        *out = Box::into_raw(Box::new(DtudTree { inner }));
        Ok(())
    })
}

/// Serialises the tree; release the string with [`dtud_string_free`].
///
/// # Safety
/// `tree` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn dtud_tree_to_json(tree: *const DtudTree, out: *mut *mut c_char) -> DtudStatus {
    guard(|| {
        out_arg(out)?;
        let tree = ref_arg(tree, "tree")?;
        let s = CString::new(tree.inner.to_json()).expect("json has no NUL");
        *out = s.into_raw();
        Ok(())
    })
}

/// # Safety
/// `tree` must be a live handle or null.
#[no_mangle]
pub unsafe extern "C" fn dtud_tree_n_attributes(tree: *const DtudTree) -> usize {
    tree.as_ref().map_or(0, |t| t.inner.attributes.len())
}

/// # Safety
/// `tree` must be a live handle or null.
#[no_mangle]
pub unsafe extern "C" fn dtud_tree_n_labels(tree: *const DtudTree) -> usize {
    tree.as_ref().map_or(0, |t| t.inner.labels.len())
}

/// Name of label `index` (labels are sorted), or null when out of range.
/// The pointer is owned by the caller; free it with [`dtud_string_free`].
///
/// # Safety
/// `tree` must be a live handle or null.
#[no_mangle]
pub unsafe extern "C" fn dtud_tree_label(tree: *const DtudTree, index: usize) -> *mut c_char {
    tree.as_ref()
        .and_then(|t| t.inner.labels.get(index))
        .and_then(|l| CString::new(l.as_str()).ok())
        .map_or(ptr::null_mut(), CString::into_raw)
}

/// Label probabilities of a design whose attributes have nominal values
/// `means` and relative deviation `uncertainty`. Writes `n_labels` values.
///
/// # Safety
/// `means` must hold `n_attributes` values and `lp_out` room for
/// `n_labels` values.
#[no_mangle]
pub unsafe extern "C" fn dtud_tree_classify(
    tree: *const DtudTree,
    means: *const f64,
    n_attributes: usize,
    uncertainty: f64,
    lp_out: *mut f64,
    n_labels: usize,
) -> DtudStatus {
    guard(|| {
        out_arg(lp_out)?;
        let tree = &ref_arg(tree, "tree")?.inner;
        let means = slice_arg(means, n_attributes, "means")?;
        if n_labels != tree.labels.len() {
            return Err(fail(
                DtudStatus::InvalidParameter,
                format!("tree has {} labels, buffer holds {n_labels}", tree.labels.len()),
            ));
        }
        let marginals = means
            .iter()
            .map(|&m| make_marginal(m, uncertainty))
            .collect::<Result<Vec<_>, _>>()
            .map_err(lib)?;
        let lp = classify(tree, &UncertainTuple::new("ffi", marginals, None)).map_err(lib)?;
        std::slice::from_raw_parts_mut(lp_out, n_labels).copy_from_slice(&lp);
        Ok(())
    })
}

/// # Safety
/// `tree` must be a handle from this library or null; it is invalid afterwards.
#[no_mangle]
pub unsafe extern "C" fn dtud_tree_free(tree: *mut DtudTree) {
    if !tree.is_null() {
        drop(Box::from_raw(tree));
    }
}

/// Fits a morphing map to `n` control points given as row-major `n×3`
/// arrays. `regularization` is added to the kernel diagonal (0 interpolates).
///
/// # Safety
/// `original` and `displaced` must hold `3n` values; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn dtud_morph_fit(
    original: *const f64,
    displaced: *const f64,
    n: usize,
    regularization: f64,
    out: *mut *mut DtudMorphMap,
) -> DtudStatus {
    guard(|| {
        out_arg(out)?;
        let o = points(slice_arg(original, 3 * n, "original")?);
        let d = points(slice_arg(displaced, 3 * n, "displaced")?);
        let cps = ControlPointSet::new(o, d).map_err(lib)?;
        let inner = fit_morph_regularized(&cps, regularization).map_err(lib)?;
        *out = Box::into_raw(Box::new(DtudMorphMap { inner }));
        Ok(())
    })
}

/// Morphs `m` nodes (row-major `m×3`) into `out` (same shape). `nodes` and
/// `out` may alias.
///
/// # Safety
/// `nodes` and `out` must hold `3m` values.
#[no_mangle]
pub unsafe extern "C" fn dtud_morph_apply(
    map: *const DtudMorphMap,
    nodes: *const f64,
    m: usize,
    out: *mut f64,
) -> DtudStatus {
    guard(|| {
        out_arg(out)?;
        let map = ref_arg(map, "map")?;
        let pts = points(slice_arg(nodes, 3 * m, "nodes")?);
        let moved = apply_morph(&map.inner, &pts);
        let dst = std::slice::from_raw_parts_mut(out, 3 * m);
        for (chunk, p) in dst.chunks_exact_mut(3).zip(moved) {
            chunk.copy_from_slice(&p);
        }
        Ok(())
    })
}

/// Estimated condition number of the fitted system, NaN for null.
///
/// # Safety
/// `map` must be a live handle or null.
#[no_mangle]
pub unsafe extern "C" fn dtud_morph_condition(map: *const DtudMorphMap) -> f64 {
    map.as_ref().map_or(f64::NAN, |m| m.inner.condition)
}

/// # Safety
/// `map` must be a handle from this library or null; it is invalid afterwards.
#[no_mangle]
pub unsafe extern "C" fn dtud_morph_free(map: *mut DtudMorphMap) {
    if !map.is_null() {
        drop(Box::from_raw(map));
    }
}
