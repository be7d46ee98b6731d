//! C ABI over the motifcount library.
//!
//! Every function returns an [`McStatus`]; on failure a message is kept per
//! thread and can be read with [`mc_last_error_message`]. Handles are opaque
//! and must be released with their `_free` function.

#![allow(clippy::missing_safety_doc)]

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::PathBuf;
use std::ptr;
use std::sync::Arc;

use motifcount::ags::{ags_run, AgsConfig};
use motifcount::buildup::{build, BuildOptions, TableSet};
use motifcount::estimate::EstimateReport;
use motifcount::graph::{ColoredGraph, Graph};
use motifcount::pipeline::{run_uniform, Budget, SampleConfig};
use motifcount::Error;
use num_traits::ToPrimitive;

/// The generated C header.
pub const HEADER: &str = include_str!(concat!(env!("OUT_DIR"), "/motifcount.h"));

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum McStatus {
    Ok = 0,
    /// Nothing to sample from.
    NoneExist = 1,
    InvalidArgument = 2,
    Io = 3,
    /// Count overflow, size limit or enumeration guard.
    Capacity = 4,
    Mismatch = 5,
    NullPointer = 6,
    Panic = 7,
}

pub struct McGraph {
    graph: Arc<Graph>,
}

pub struct McTables {
    tables: TableSet,
}

pub struct McReport {
    report: EstimateReport,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(msg: &str) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = c);
}

fn status_of(e: &Error) -> McStatus {
    match e.exit_code() {
        1 => McStatus::NoneExist,
        2 => McStatus::InvalidArgument,
        3 => McStatus::Io,
        4 => McStatus::Capacity,
        5 => McStatus::Mismatch,
        _ => McStatus::Panic,
    }
}

fn guard(f: impl FnOnce() -> Result<(), McStatus>) -> McStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => McStatus::Ok,
        Ok(Err(s)) => s,
        Err(_) => {
            set_error("internal panic");
            McStatus::Panic
        }
    }
}

fn fail(e: Error) -> McStatus {
    set_error(&e.to_string());
    status_of(&e)
}

fn null() -> McStatus {
    set_error("null pointer argument");
    McStatus::NullPointer
}

unsafe fn path_arg(p: *const c_char) -> Result<PathBuf, McStatus> {
    if p.is_null() {
        return Err(null());
    }
    CStr::from_ptr(p)
        .to_str()
        .map(PathBuf::from)
        .map_err(|_| fail(Error::InvalidArgument("path is not valid UTF-8".into())))
}

unsafe fn out_ptr<T>(out: *mut *mut T, value: T) -> Result<(), McStatus> {
    if out.is_null() {
        return Err(null());
    }
    *out = Box::into_raw(Box::new(value));
    Ok(())
}

unsafe fn deref<'a, T>(p: *const T) -> Result<&'a T, McStatus> {
    p.as_ref().ok_or_else(null)
}

/// Message of the last failed call on this thread; empty if none. Valid until
/// the next call on the same thread.
#[no_mangle]
pub extern "C" fn mc_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// Loads a whitespace-separated edge list or a binary graph cache.
#[no_mangle]
pub unsafe extern "C" fn mc_graph_load(path: *const c_char, out: *mut *mut McGraph) -> McStatus {
    guard(|| {
        let path = path_arg(path)?;
        let graph = Graph::open(&path).map_err(fail)?;
        out_ptr(out, McGraph { graph: Arc::new(graph) })
    })
}

/// Builds a graph from `m` edges given as `2m` node ids in `0..n`.
#[no_mangle]
pub unsafe extern "C" fn mc_graph_from_edges(n: usize, edges: *const u32, m: usize, out: *mut *mut McGraph) -> McStatus {
    guard(|| {
        if edges.is_null() && m > 0 {
            return Err(null());
        }
        let flat = if m == 0 { &[][..] } else { std::slice::from_raw_parts(edges, 2 * m) };
        let pairs: Vec<(u32, u32)> = flat.chunks_exact(2).map(|c| (c[0], c[1])).collect();
        let graph = Graph::from_edges(n, &pairs).map_err(fail)?;
        out_ptr(out, McGraph { graph: Arc::new(graph) })
    })
}

#[no_mangle]
pub unsafe extern "C" fn mc_graph_node_count(g: *const McGraph) -> usize {
    g.as_ref().map_or(0, |g| g.graph.node_count())
}

#[no_mangle]
pub unsafe extern "C" fn mc_graph_edge_count(g: *const McGraph) -> usize {
    g.as_ref().map_or(0, |g| g.graph.edge_count())
}

#[no_mangle]
pub unsafe extern "C" fn mc_graph_free(g: *mut McGraph) {
    if !g.is_null() {
        drop(Box::from_raw(g));
    }
}

/// Colors the graph and builds the count tables of motif size `k` in `dir`.
/// `lambda <= 0` selects the uniform coloring. `threads == 0` uses every core.
#[no_mangle]
pub unsafe extern "C" fn mc_build(
    g: *const McGraph,
    k: usize,
    seed: u64,
    lambda: f64,
    dir: *const c_char,
    threads: usize,
    out: *mut *mut McTables,
) -> McStatus {
    guard(|| {
        let g = deref(g)?;
        let dir = path_arg(dir)?;
        let colored = if lambda > 0.0 {
            ColoredGraph::biased(Arc::clone(&g.graph), k, lambda, seed)
        } else {
            ColoredGraph::uniform(Arc::clone(&g.graph), k, seed)
        }
        .map_err(fail)?;
        let mut opts = BuildOptions::for_k(k);
        opts.threads = threads;
        let tables = build(&colored, &opts, &dir).map_err(fail)?;
        out_ptr(out, McTables { tables })
    })
}

/// Opens tables written by an earlier build.
#[no_mangle]
pub unsafe extern "C" fn mc_tables_open(dir: *const c_char, out: *mut *mut McTables) -> McStatus {
    guard(|| {
        let dir = path_arg(dir)?;
        let tables = TableSet::open(&dir).map_err(fail)?;
        out_ptr(out, McTables { tables })
    })
}

#[no_mangle]
pub unsafe extern "C" fn mc_tables_k(t: *const McTables) -> usize {
    t.as_ref().map_or(0, |t| t.tables.k())
}

/// Writes the colorful treelet total as a NUL-terminated decimal string.
/// Fails with `MC_STATUS_INVALID_ARGUMENT` if `cap` is too small.
#[no_mangle]
pub unsafe extern "C" fn mc_tables_total(t: *const McTables, buf: *mut c_char, cap: usize) -> McStatus {
    guard(|| {
        let t = deref(t)?;
        if buf.is_null() {
            return Err(null());
        }
        let s = t.tables.total().to_string();
        if s.len() + 1 > cap {
            return Err(fail(Error::InvalidArgument(format!("buffer needs {} bytes", s.len() + 1))));
        }
        ptr::copy_nonoverlapping(s.as_ptr(), buf as *mut u8, s.len());
        *buf.add(s.len()) = 0;
        Ok(())
    })
}

#[no_mangle]
pub unsafe extern "C" fn mc_tables_free(t: *mut McTables) {
    if !t.is_null() {
        drop(Box::from_raw(t));
    }
}

/// Uniform graphlet sampling with `samples` draws.
#[no_mangle]
pub unsafe extern "C" fn mc_sample_uniform(
    t: *const McTables,
    g: *const McGraph,
    samples: u64,
    seed: u64,
    threads: usize,
    out: *mut *mut McReport,
) -> McStatus {
    guard(|| {
        let (t, g) = (deref(t)?, deref(g)?);
        let mut cfg = SampleConfig::new(Budget::samples(samples), seed);
        cfg.threads = threads;
        let report = run_uniform(&t.tables, &g.graph, &cfg).map_err(fail)?;
        out_ptr(out, McReport { report })
    })
}

/// Adaptive graphlet sampling with covering threshold `threshold` and at most `samples` draws.
#[no_mangle]
pub unsafe extern "C" fn mc_sample_ags(
    t: *const McTables,
    g: *const McGraph,
    threshold: u64,
    samples: u64,
    seed: u64,
    threads: usize,
    out: *mut *mut McReport,
) -> McStatus {
    guard(|| {
        let (t, g) = (deref(t)?, deref(g)?);
        let mut cfg = AgsConfig::new(threshold, Budget::samples(samples), seed);
        cfg.threads = threads;
        let report = ags_run(&t.tables, &g.graph, &cfg, |_| {}).map_err(fail)?.report;
        out_ptr(out, McReport { report })
    })
}

/// Number of classes in the report.
#[no_mangle]
pub unsafe extern "C" fn mc_report_len(r: *const McReport) -> usize {
    r.as_ref().map_or(0, |r| r.report.classes.len())
}

/// Class `i`: its 128-bit signature as two halves, estimated count, samples and covered flag.
/// Any output pointer may be null.
#[no_mangle]
pub unsafe extern "C" fn mc_report_class(
    r: *const McReport,
    i: usize,
    signature_hi: *mut u64,
    signature_lo: *mut u64,
    count: *mut f64,
    samples: *mut u64,
    covered: *mut bool,
) -> McStatus {
    guard(|| {
        let r = deref(r)?;
        let c = r
            .report
            .classes
            .get(i)
            .ok_or_else(|| fail(Error::InvalidArgument(format!("class index {i} out of range"))))?;
        if let Some(p) = signature_hi.as_mut() {
            *p = (c.signature.0 >> 64) as u64;
        }
        if let Some(p) = signature_lo.as_mut() {
            *p = c.signature.0 as u64;
        }
        if let Some(p) = count.as_mut() {
            *p = c.count.to_f64().unwrap_or(f64::INFINITY);
        }
        if let Some(p) = samples.as_mut() {
            *p = c.samples;
        }
        if let Some(p) = covered.as_mut() {
            *p = c.covered;
        }
        Ok(())
    })
}

#[no_mangle]
pub unsafe extern "C" fn mc_report_write_csv(r: *const McReport, path: *const c_char) -> McStatus {
    guard(|| {
        let r = deref(r)?;
        let path = path_arg(path)?;
        r.report.write_csv(&path).map_err(fail)
    })
}

#[no_mangle]
pub unsafe extern "C" fn mc_report_free(r: *mut McReport) {
    if !r.is_null() {
        drop(Box::from_raw(r));
    }
}
