//! Execution helper shared by the batch-shaped computations (game tables,
//! decomposition tables, per-point attribution).
//!
//! With the `parallel` feature the map step runs on the current rayon pool;
//! results are collected back in index order and every reduction downstream
//! stays sequential over that order, so parallel and sequential builds agree
//! bitwise.

#[cfg(feature = "parallel")]
use rayon::prelude::*;

/// Below this size the parallel build maps sequentially; fan-out overhead
/// dominates for tiny inputs and the result is identical either way.
const PAR_THRESHOLD: usize = 32;

/// Maps `0..n` through `f`, returning results in index order.
pub fn map_indexed<U, F>(n: usize, f: F) -> Vec<U>
where
    U: Send,
    F: Fn(usize) -> U + Sync + Send,
{
    #[cfg(feature = "parallel")]
    {
        if n >= PAR_THRESHOLD {
            return (0..n).into_par_iter().map(f).collect();
        }
    }
    map_indexed_seq(n, f)
}

/// Sequential version of [`map_indexed`]; always available, used by the bench
/// suite as the comparison baseline.
pub fn map_indexed_seq<U, F>(n: usize, f: F) -> Vec<U>
where
    F: Fn(usize) -> U,
{
    (0..n).map(f).collect()
}

/// Fallible variant of [`map_indexed`]; the first error in index order wins.
pub fn try_map_indexed<U, F>(n: usize, f: F) -> crate::Result<Vec<U>>
where
    U: Send,
    F: Fn(usize) -> crate::Result<U> + Sync + Send,
{
    #[cfg(feature = "parallel")]
    {
        if n >= PAR_THRESHOLD {
            let results: Vec<crate::Result<U>> = (0..n).into_par_iter().map(f).collect();
            return results.into_iter().collect();
        }
    }
    (0..n).map(f).collect()
}
