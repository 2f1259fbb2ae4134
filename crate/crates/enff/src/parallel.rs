//! Data-parallel map with a sequential fallback.
//!
//! Built with the `parallel` feature (the default), [`map_ordered`] fans the
//! closure out over rayon's global pool; without it, the same closure runs
//! in a plain loop. Both paths collect results in input order and perform no
//! floating-point reductions of their own, so every caller gets bit-identical
//! output either way.

#[cfg(feature = "parallel")]
use rayon::prelude::*;

/// Apply `f` to every item, returning results in input order.
#[cfg(feature = "parallel")]
pub fn map_ordered<T, U, F>(items: &[T], f: F) -> Vec<U>
where
    T: Sync,
    U: Send,
    F: Fn(&T) -> U + Sync + Send,
{
    items.par_iter().map(f).collect()
}

/// Apply `f` to every item, returning results in input order.
#[cfg(not(feature = "parallel"))]
pub fn map_ordered<T, U, F>(items: &[T], f: F) -> Vec<U>
where
    F: Fn(&T) -> U,
{
    items.iter().map(f).collect()
}
