//! C ABI for irrigation-core.
//!
//! Objects are opaque handles created by `irr_*_new`/`irr_*_sample` and
//! released with the matching `*_free`. Every fallible call returns an
//! [`IrrStatus`]; on failure, `irr_last_error()` describes the cause until the
//! next failing call on the same thread.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use irrigation_core::components::components;
use irrigation_core::gw::{extinction_bound, extinction_exact, ThinnedLaw};
use irrigation_core::{
    bounds, sample_irrigation, sample_points, undirected_view, Error, GridIndex, IrrigationDigraph, OffspringLaw,
    SelfSelection, TorusPoints,
};

/// Result code of every fallible call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum IrrStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidParameter = 2,
    InvalidLaw = 3,
    OutOfRange = 4,
    BufferTooSmall = 5,
    Failed = 6,
    Panic = 7,
}

/// Sampled points on the unit torus.
pub struct IrrPoints(TorusPoints);

/// Sampled irrigation digraph.
pub struct IrrGraph(IrrigationDigraph);

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: impl Into<String>) {
    let msg = msg.into().replace('\0', " ");
    LAST_ERROR.with(|e| *e.borrow_mut() = CString::new(msg).ok());
}

fn fail(status: IrrStatus, msg: impl Into<String>) -> IrrStatus {
    set_error(msg);
    status
}

fn from_error(e: Error) -> IrrStatus {
    let status = match e {
        Error::InvalidParameter { .. } => IrrStatus::InvalidParameter,
        Error::InvalidLaw { .. } => IrrStatus::InvalidLaw,
        _ => IrrStatus::Failed,
    };
    fail(status, e.to_string())
}

/// Run `f`, turning panics into `IrrStatus::Panic`.
fn guard(f: impl FnOnce() -> IrrStatus) -> IrrStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(s) => s,
        Err(p) => {
            let msg = p
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| p.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "unknown panic".into());
            fail(IrrStatus::Panic, format!("panic: {msg}"))
        }
    }
}

macro_rules! non_null {
    ($($p:ident),+) => {
        $(if $p.is_null() {
            return fail(IrrStatus::NullPointer, concat!("`", stringify!($p), "` is null"));
        })+
    };
}

/// Message for the last failing call on this thread, or NULL. Valid until the
/// next failing call on the same thread.
#[no_mangle]
pub extern "C" fn irr_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |s| s.as_ptr()))
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn irr_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr() as *const c_char
}

/// Sample `n` uniform points. `*out` receives a handle to free with
/// `irr_points_free`.
///
/// # Safety
/// `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn irr_points_sample(n: usize, seed: u64, out: *mut *mut IrrPoints) -> IrrStatus {
    non_null!(out);
    guard(|| match sample_points(n, seed) {
        Ok(p) => {
            *out = Box::into_raw(Box::new(IrrPoints(p)));
            IrrStatus::Ok
        }
        Err(e) => from_error(e),
    })
}

/// Build a point set from `n` interleaved `x, y` coordinates in [0,1).
///
/// # Safety
/// `xy` must point to `2 * n` doubles; `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn irr_points_from_coords(xy: *const f64, n: usize, out: *mut *mut IrrPoints) -> IrrStatus {
    non_null!(xy, out);
    guard(|| {
        let raw = std::slice::from_raw_parts(xy, 2 * n);
        let coords = raw.chunks_exact(2).map(|c| [c[0], c[1]]).collect();
        match TorusPoints::from_coords(coords, 0) {
            Ok(p) => {
                *out = Box::into_raw(Box::new(IrrPoints(p)));
                IrrStatus::Ok
            }
            Err(e) => from_error(e),
        }
    })
}

/// Number of points; 0 for NULL.
///
/// # Safety
/// `points` must be NULL or a live handle.
#[no_mangle]
pub unsafe extern "C" fn irr_points_len(points: *const IrrPoints) -> usize {
    points.as_ref().map_or(0, |p| p.0.len())
}

/// Coordinates of point `i`.
///
/// # Safety
/// `points` must be a live handle; `x` and `y` valid for writes.
#[no_mangle]
pub unsafe extern "C" fn irr_points_get(points: *const IrrPoints, i: usize, x: *mut f64, y: *mut f64) -> IrrStatus {
    non_null!(points, x, y);
    let p = &(*points).0;
    if i >= p.len() {
        return fail(IrrStatus::OutOfRange, format!("point {i} out of range (n = {})", p.len()));
    }
    let pt = p.get(i);
    *x = pt[0];
    *y = pt[1];
    IrrStatus::Ok
}

/// # Safety
/// `points` must be NULL or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn irr_points_free(points: *mut IrrPoints) {
    if !points.is_null() {
        drop(Box::from_raw(points));
    }
}

/// Sample the irrigation digraph on `points` with radius `r` and offspring
/// law `law` (e.g. `"1:0.8,2:0.2"`). With `exclude_self`, draws skip the
/// vertex itself.
///
/// # Safety
/// `points` must be a live handle, `law` a NUL-terminated string and `out`
/// valid for writes.
#[no_mangle]
pub unsafe extern "C" fn irr_graph_sample(
    points: *const IrrPoints,
    r: f64,
    law: *const c_char,
    seed: u64,
    exclude_self: bool,
    out: *mut *mut IrrGraph,
) -> IrrStatus {
    non_null!(points, law, out);
    guard(|| {
        let Ok(law) = CStr::from_ptr(law).to_str() else {
            return fail(IrrStatus::InvalidLaw, "law is not UTF-8");
        };
        let law: OffspringLaw = match law.parse() {
            Ok(l) => l,
            Err(e) => return from_error(e),
        };
        let pts = &(*points).0;
        let mode = if exclude_self {
            SelfSelection::Excluded
        } else {
            SelfSelection::Allowed
        };
        let g = GridIndex::for_radius(pts, r).and_then(|idx| sample_irrigation(pts, &idx, r, &law, seed, mode));
        match g {
            Ok(g) => {
                *out = Box::into_raw(Box::new(IrrGraph(g)));
                IrrStatus::Ok
            }
            Err(e) => from_error(e),
        }
    })
}

/// Vertex count; 0 for NULL.
///
/// # Safety
/// `graph` must be NULL or a live handle.
#[no_mangle]
pub unsafe extern "C" fn irr_graph_len(graph: *const IrrGraph) -> usize {
    graph.as_ref().map_or(0, |g| g.0.n())
}

/// Number of arcs (self-draws excluded); 0 for NULL.
///
/// # Safety
/// `graph` must be NULL or a live handle.
#[no_mangle]
pub unsafe extern "C" fn irr_graph_arc_count(graph: *const IrrGraph) -> usize {
    graph.as_ref().map_or(0, |g| g.0.arc_count())
}

/// Copy the out-neighbours of `v` into `buf`. `*len` receives the
/// out-degree; if it exceeds `cap`, nothing is copied and
/// `IRR_STATUS_BUFFER_TOO_SMALL` is returned. `buf` may be NULL when `cap` is 0.
///
/// # Safety
/// `graph` must be a live handle, `buf` valid for `cap` writes and `len`
/// valid for writes.
#[no_mangle]
pub unsafe extern "C" fn irr_graph_out(
    graph: *const IrrGraph,
    v: usize,
    buf: *mut u32,
    cap: usize,
    len: *mut usize,
) -> IrrStatus {
    non_null!(graph, len);
    let g = &(*graph).0;
    if v >= g.n() {
        return fail(IrrStatus::OutOfRange, format!("vertex {v} out of range (n = {})", g.n()));
    }
    let out = g.out(v);
    *len = out.len();
    if out.len() > cap {
        return fail(IrrStatus::BufferTooSmall, format!("vertex {v} has {} out-arcs, buffer holds {cap}", out.len()));
    }
    if !out.is_empty() {
        non_null!(buf);
        ptr::copy_nonoverlapping(out.as_ptr(), buf, out.len());
    }
    IrrStatus::Ok
}

/// Connected-component census of the undirected view.
#[repr(C)]
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct IrrCensus {
    pub c1: usize,
    pub c2: usize,
    pub components: usize,
    pub edges: usize,
}

/// # Safety
/// `graph` must be a live handle and `out` valid for writes.
#[no_mangle]
pub unsafe extern "C" fn irr_graph_census(graph: *const IrrGraph, out: *mut IrrCensus) -> IrrStatus {
    non_null!(graph, out);
    guard(|| {
        let u = undirected_view(&(*graph).0);
        let c = components(&u);
        *out = IrrCensus {
            c1: c.c1(),
            c2: c.c2(),
            components: c.component_count(),
            edges: u.edge_count(),
        };
        IrrStatus::Ok
    })
}

/// # Safety
/// `graph` must be NULL or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn irr_graph_free(graph: *mut IrrGraph) {
    if !graph.is_null() {
        drop(Box::from_raw(graph));
    }
}

fn scalar(out: *mut f64, v: irrigation_core::Result<f64>) -> IrrStatus {
    match v {
        Ok(v) => {
            // SAFETY: checked non-null by callers
            unsafe { *out = v };
            IrrStatus::Ok
        }
        Err(e) => from_error(e),
    }
}

/// Connectivity radius of the random geometric graph, sqrt(log n / (n pi)).
///
/// # Safety
/// `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn irr_rgg_connectivity_radius(n: f64, out: *mut f64) -> IrrStatus {
    non_null!(out);
    guard(|| scalar(out, bounds::rgg_connectivity_radius(n)))
}

/// Connectivity threshold of the irrigation graph, sqrt(2 log n / log log n).
///
/// # Safety
/// `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn irr_irrigation_connectivity_threshold(n: f64, out: *mut f64) -> IrrStatus {
    non_null!(out);
    guard(|| scalar(out, bounds::irrigation_connectivity_threshold(n)))
}

/// Root t0 > 1 of t log t - t - 1 = 0.
#[no_mangle]
pub extern "C" fn irr_t_zero() -> f64 {
    bounds::t_zero()
}

unsafe fn thinned(law: *const c_char, alpha: f64) -> Result<ThinnedLaw, IrrStatus> {
    let Ok(s) = CStr::from_ptr(law).to_str() else {
        return Err(fail(IrrStatus::InvalidLaw, "law is not UTF-8"));
    };
    let base: OffspringLaw = s.parse().map_err(from_error)?;
    ThinnedLaw::new(base, alpha).map_err(from_error)
}

/// Extinction probability of the Galton–Watson process whose offspring are
/// Bin(xi, alpha), xi drawn from `law`.
///
/// # Safety
/// `law` must be a NUL-terminated string and `out` valid for writes.
#[no_mangle]
pub unsafe extern "C" fn irr_extinction_exact(law: *const c_char, alpha: f64, out: *mut f64) -> IrrStatus {
    non_null!(law, out);
    guard(|| match thinned(law, alpha) {
        Ok(t) => scalar(out, Ok(extinction_exact(&t, 1e-12))),
        Err(s) => s,
    })
}

/// Closed-form upper bound on the same extinction probability.
///
/// # Safety
/// `law` must be a NUL-terminated string and `out` valid for writes.
#[no_mangle]
pub unsafe extern "C" fn irr_extinction_bound(law: *const c_char, alpha: f64, out: *mut f64) -> IrrStatus {
    non_null!(law, out);
    guard(|| match thinned(law, alpha) {
        Ok(t) => scalar(out, extinction_bound(&t)),
        Err(s) => s,
    })
}
