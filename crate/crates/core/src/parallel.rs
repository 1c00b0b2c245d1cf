//! Order-preserving data-parallel map, sequential without the `parallel` feature.

#[cfg(feature = "parallel")]
pub(crate) fn map<T, U, F>(items: &[T], f: F) -> Vec<U>
where
    T: Sync,
    U: Send,
    F: Fn(&T) -> U + Sync + Send,
{
    use rayon::prelude::*;
    items.par_iter().map(f).collect()
}

#[cfg(not(feature = "parallel"))]
pub(crate) fn map<T, U, F>(items: &[T], f: F) -> Vec<U>
where
    F: Fn(&T) -> U,
{
    items.iter().map(f).collect()
}

/// Sizes the global worker pool. Must be called before any parallel work.
#[cfg(feature = "parallel")]
pub fn configure_workers(workers: usize) -> crate::Result<()> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build_global()
        .map_err(|e| crate::Error::Config(format!("worker pool: {e}")))
}

#[cfg(not(feature = "parallel"))]
pub fn configure_workers(_workers: usize) -> crate::Result<()> {
    Ok(())
}
