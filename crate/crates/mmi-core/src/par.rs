//! Deterministic data-parallel helpers.
//!
//! Every reduction in this crate must produce bit-identical results whether
//! the `parallel` feature is on or off. The pattern: map independent work
//! items in parallel (order-preserving collect), then fold the results
//! sequentially in index order. Sums additionally go through fixed-size
//! chunks so the floating-point association is the same in both modes.

#[cfg(feature = "parallel")]
use rayon::prelude::*;

/// Chunk width for deterministic sums. Fixed so the reduction tree does not
/// depend on thread count.
pub(crate) const SUM_CHUNK: usize = 1024;

/// Maps `f` over `0..n`, preserving index order in the output.
pub fn map_indexed<U, F>(n: usize, f: F) -> Vec<U>
where
    U: Send,
    F: Fn(usize) -> U + Sync + Send,
{
    #[cfg(feature = "parallel")]
    {
        (0..n).into_par_iter().map(f).collect()
    }
    #[cfg(not(feature = "parallel"))]
    {
        (0..n).map(f).collect()
    }
}

/// Applies `f` to the half-open index ranges `[lo, hi)` of each fixed-size
/// chunk, returning per-chunk results in chunk order.
pub(crate) fn map_chunks<U, F>(n: usize, f: F) -> Vec<U>
where
    U: Send,
    F: Fn(usize, usize) -> U + Sync + Send,
{
    let n_chunks = n.div_ceil(SUM_CHUNK);
    map_indexed(n_chunks, |c| {
        let lo = c * SUM_CHUNK;
        let hi = (lo + SUM_CHUNK).min(n);
        f(lo, hi)
    })
}
