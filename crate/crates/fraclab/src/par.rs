//! Data-parallel helpers with a sequential fallback.
//!
//! With the `parallel` feature (default) the maps below fan out over rayon;
//! without it they run sequentially. Either way results are collected in
//! index order, so callers see bit-identical output regardless of thread
//! count. Reductions that are sensitive to summation order (norms,
//! quadrature) stay sequential by construction and never go through here.

#[cfg(feature = "parallel")]
pub(crate) fn par_map<T, F>(n: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    use rayon::prelude::*;
    (0..n).into_par_iter().map(f).collect()
}

#[cfg(not(feature = "parallel"))]
pub(crate) fn par_map<T, F>(n: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    (0..n).map(f).collect()
}

/// Cap the worker pool (the THREADS environment knob). No-op without the
/// `parallel` feature; on repeated calls only the first takes effect.
#[cfg(feature = "parallel")]
pub fn configure_threads(n: usize) {
    let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
}

#[cfg(not(feature = "parallel"))]
pub fn configure_threads(_n: usize) {}

/// Name of the compiled execution mode, used by benches and reports.
pub fn mode() -> &'static str {
    if cfg!(feature = "parallel") {
        "parallel"
    } else {
        "sequential"
    }
}
