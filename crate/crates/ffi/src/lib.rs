//! C interface. Objects are opaque handles created by `*_new`/`*_load`
//! functions and released with the matching `*_free`. Every fallible call
//! returns an [`LpegnStatus`]; the message for the last failure on the
//! calling thread is available from [`lpegn_last_error`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::ptr;

use lpegn::basis::{build_basis, build_restricted_basis};
use lpegn::graph::ConcreteGraph;
use lpegn::layers::{Model, ModelConfig};
use lpegn::Error;

/// Result code of every fallible call.
#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum LpegnStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    Shape = 3,
    Io = 4,
    Format = 5,
    Numerical = 6,
    Degenerate = 7,
    BufferTooSmall = 8,
    Panic = 9,
}

/// Equivariant basis for a pair of orders at a fixed size.
pub struct LpegnBasis {
    len: usize,
    rows: usize,
    cols: usize,
    tensors: Vec<Vec<f64>>,
}

/// Graph with concrete node ids.
pub struct LpegnGraph(ConcreteGraph);

/// Model with its weights.
pub struct LpegnModel(Model);

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).expect("nul bytes removed");
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn status_of(e: &Error) -> LpegnStatus {
    match e {
        Error::Shape(_) => LpegnStatus::Shape,
        Error::Input(_) | Error::Usage(_) => LpegnStatus::InvalidArgument,
        Error::Degenerate(_) => LpegnStatus::Degenerate,
        Error::Load { .. } | Error::Io(_) => LpegnStatus::Io,
        Error::Format { .. } | Error::Json(_) => LpegnStatus::Format,
        Error::Numerical(_) => LpegnStatus::Numerical,
    }
}

struct Fail(LpegnStatus, String);

impl From<Error> for Fail {
    fn from(e: Error) -> Self {
        Fail(status_of(&e), e.to_string())
    }
}

fn guard(f: impl FnOnce() -> Result<(), Fail>) -> LpegnStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => LpegnStatus::Ok,
        Ok(Err(Fail(status, msg))) => {
            set_error(msg);
            status
        }
        Err(p) => {
            let msg = p
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| p.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "panic".into());
            set_error(format!("internal panic: {msg}"));
            LpegnStatus::Panic
        }
    }
}

fn null(what: &str) -> Fail {
    Fail(LpegnStatus::NullPointer, format!("{what} is null"))
}

unsafe fn slice<'a, T>(p: *const T, n: usize, what: &str) -> Result<&'a [T], Fail> {
    if n == 0 {
        return Ok(&[]);
    }
    if p.is_null() {
        return Err(null(what));
    }
    Ok(std::slice::from_raw_parts(p, n))
}

unsafe fn path_arg<'a>(p: *const c_char) -> Result<&'a Path, Fail> {
    if p.is_null() {
        return Err(null("path"));
    }
    let s = CStr::from_ptr(p)
        .to_str()
        .map_err(|_| Fail(LpegnStatus::InvalidArgument, "path is not UTF-8".into()))?;
    Ok(Path::new(s))
}

unsafe fn put<T>(out: *mut *mut T, value: T) -> Result<(), Fail> {
    if out.is_null() {
        return Err(null("output handle"));
    }
    *out = Box::into_raw(Box::new(value));
    Ok(())
}

unsafe fn copy_out(src: &[f64], out: *mut f64, len: usize) -> Result<(), Fail> {
    if len < src.len() {
        return Err(Fail(
            LpegnStatus::BufferTooSmall,
            format!("buffer holds {len} values, {} needed", src.len()),
        ));
    }
    if out.is_null() {
        return Err(null("output buffer"));
    }
    ptr::copy_nonoverlapping(src.as_ptr(), out, src.len());
    Ok(())
}

/// Message of the last failed call on this thread, or NULL. The pointer is
/// valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn lpegn_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn lpegn_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Basis of equivariant maps from order `k_in` to order `k_out` tensors
/// over `size` nodes. With `n_dropped > 0`, the listed nodes are removed
/// from the symmetry group.
///
/// # Safety
/// `dropped` must point to `n_dropped` values; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn lpegn_basis_new(
    k_in: usize,
    k_out: usize,
    size: usize,
    dropped: *const usize,
    n_dropped: usize,
    out: *mut *mut LpegnBasis,
) -> LpegnStatus {
    guard(|| {
        let dropped = slice(dropped, n_dropped, "dropped")?;
        let basis = if dropped.is_empty() {
            let b = build_basis(k_in, k_out, size)?;
            LpegnBasis {
                len: b.len(),
                rows: b.rows(),
                cols: b.cols(),
                tensors: b.tensors,
            }
        } else {
            let b = build_restricted_basis(k_in, k_out, size, dropped)?;
            LpegnBasis {
                len: b.len(),
                rows: b.rows(),
                cols: b.cols(),
                tensors: b.tensors,
            }
        };
        put(out, basis)
    })
}

/// # Safety
/// `basis` must be NULL or a live handle.
#[no_mangle]
pub unsafe extern "C" fn lpegn_basis_len(basis: *const LpegnBasis) -> usize {
    basis.as_ref().map_or(0, |b| b.len)
}

/// Rows (`size^k_out`) and columns (`size^k_in`) of each basis tensor.
///
/// # Safety
/// `basis` must be a live handle; `rows` and `cols` writable.
#[no_mangle]
pub unsafe extern "C" fn lpegn_basis_shape(basis: *const LpegnBasis, rows: *mut usize, cols: *mut usize) -> LpegnStatus {
    guard(|| {
        let b = basis.as_ref().ok_or_else(|| null("basis"))?;
        if rows.is_null() || cols.is_null() {
            return Err(null("shape output"));
        }
        *rows = b.rows;
        *cols = b.cols;
        Ok(())
    })
}

/// Copies basis tensor `index` (row-major, rows x cols) into `out`.
///
/// # Safety
/// `basis` must be a live handle; `out` must hold `len` doubles.
#[no_mangle]
pub unsafe extern "C" fn lpegn_basis_tensor(
    basis: *const LpegnBasis,
    index: usize,
    out: *mut f64,
    len: usize,
) -> LpegnStatus {
    guard(|| {
        let b = basis.as_ref().ok_or_else(|| null("basis"))?;
        let t = b.tensors.get(index).ok_or_else(|| {
            Fail(
                LpegnStatus::InvalidArgument,
                format!("element {index} of a {}-element basis", b.len),
            )
        })?;
        copy_out(t, out, len)
    })
}

/// # Safety
/// `basis` must be NULL or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn lpegn_basis_free(basis: *mut LpegnBasis) {
    if !basis.is_null() {
        drop(Box::from_raw(basis));
    }
}

/// Graph over node ids `ids` with `n_edges` undirected edges given as
/// consecutive id pairs in `edges`. `labels` may be NULL for unlabelled
/// nodes.
///
/// # Safety
/// `ids` and `labels` must hold `n_nodes` values, `edges` `2 * n_edges`.
#[no_mangle]
pub unsafe extern "C" fn lpegn_graph_new(
    ids: *const usize,
    n_nodes: usize,
    edges: *const usize,
    n_edges: usize,
    labels: *const usize,
    out: *mut *mut LpegnGraph,
) -> LpegnStatus {
    guard(|| {
        let ids = slice(ids, n_nodes, "ids")?.to_vec();
        let flat = slice(edges, 2 * n_edges, "edges")?;
        let pairs: Vec<(usize, usize)> = flat.chunks(2).map(|p| (p[0], p[1])).collect();
        let labels = if labels.is_null() {
            vec![0; n_nodes]
        } else {
            slice(labels, n_nodes, "labels")?.to_vec()
        };
        put(out, LpegnGraph(ConcreteGraph::new(ids, &pairs, labels)?))
    })
}

/// # Safety
/// `graph` must be NULL or a live handle.
#[no_mangle]
pub unsafe extern "C" fn lpegn_graph_num_nodes(graph: *const LpegnGraph) -> usize {
    graph.as_ref().map_or(0, |g| g.0.num_nodes())
}

/// # Safety
/// `graph` must be NULL or a live handle.
#[no_mangle]
pub unsafe extern "C" fn lpegn_graph_num_edges(graph: *const LpegnGraph) -> usize {
    graph.as_ref().map_or(0, |g| g.0.num_edges())
}

/// # Safety
/// `graph` must be NULL or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn lpegn_graph_free(graph: *mut LpegnGraph) {
    if !graph.is_null() {
        drop(Box::from_raw(graph));
    }
}

/// Freshly initialized model from a JSON model configuration.
///
/// # Safety
/// `config_json` must be a NUL-terminated string; `out` writable.
#[no_mangle]
pub unsafe extern "C" fn lpegn_model_from_config(config_json: *const c_char, out: *mut *mut LpegnModel) -> LpegnStatus {
    guard(|| {
        if config_json.is_null() {
            return Err(null("config"));
        }
        let text = CStr::from_ptr(config_json)
            .to_str()
            .map_err(|_| Fail(LpegnStatus::InvalidArgument, "config is not UTF-8".into()))?;
        let cfg: ModelConfig = serde_json::from_str(text).map_err(|e| Fail(LpegnStatus::Format, e.to_string()))?;
        put(out, LpegnModel(Model::new(cfg, None)?))
    })
}

/// Loads a model checkpoint.
///
/// # Safety
/// `path` must be a NUL-terminated string; `out` writable.
#[no_mangle]
pub unsafe extern "C" fn lpegn_model_load(path: *const c_char, out: *mut *mut LpegnModel) -> LpegnStatus {
    guard(|| {
        let path = path_arg(path)?;
        put(out, LpegnModel(Model::load(path)?))
    })
}

/// Writes a model checkpoint.
///
/// # Safety
/// `model` must be a live handle; `path` a NUL-terminated string.
#[no_mangle]
pub unsafe extern "C" fn lpegn_model_save(model: *const LpegnModel, path: *const c_char) -> LpegnStatus {
    guard(|| {
        let m = model.as_ref().ok_or_else(|| null("model"))?;
        m.0.save(path_arg(path)?)?;
        Ok(())
    })
}

/// # Safety
/// `model` must be NULL or a live handle.
#[no_mangle]
pub unsafe extern "C" fn lpegn_model_num_classes(model: *const LpegnModel) -> usize {
    model.as_ref().map_or(0, |m| m.0.config.classes)
}

/// Class logits of `graph`; `out` must hold at least the class count.
///
/// # Safety
/// `model` and `graph` must be live handles; `out` must hold `len` doubles.
#[no_mangle]
pub unsafe extern "C" fn lpegn_model_logits(
    model: *const LpegnModel,
    graph: *const LpegnGraph,
    out: *mut f64,
    len: usize,
) -> LpegnStatus {
    guard(|| {
        let m = model.as_ref().ok_or_else(|| null("model"))?;
        let g = graph.as_ref().ok_or_else(|| null("graph"))?;
        copy_out(&m.0.logits(&g.0)?, out, len)
    })
}

/// # Safety
/// `model` must be NULL or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn lpegn_model_free(model: *mut LpegnModel) {
    if !model.is_null() {
        drop(Box::from_raw(model));
    }
}
