//! Grid fan-out: every scan point is an independent pure evaluation, so
//! drivers map over grids in parallel (rayon, `parallel` feature, default
//! on) and merge results in grid order. Outputs are identical for any
//! worker count; the sequential path stays available for comparison.

#[cfg(feature = "parallel")]
use rayon::prelude::*;

/// Map `f` over `items`, preserving input order in the output.
pub fn map_ordered<T, U, F>(items: Vec<T>, f: F) -> Vec<U>
where
    T: Send,
    U: Send,
    F: Fn(T) -> U + Sync + Send,
{
    #[cfg(feature = "parallel")]
    {
        items.into_par_iter().map(f).collect()
    }
    #[cfg(not(feature = "parallel"))]
    {
        items.into_iter().map(f).collect()
    }
}

/// Sequential counterpart of [`map_ordered`], kept unconditionally for
/// benchmarking the parallel speedup.
pub fn map_ordered_seq<T, U, F>(items: Vec<T>, f: F) -> Vec<U>
where
    F: Fn(T) -> U,
{
    items.into_iter().map(f).collect()
}

/// Whether this build fans grid scans out across threads.
pub fn parallel_enabled() -> bool {
    cfg!(feature = "parallel")
}
