//! Execution strategy for corpus-level loops.
//!
//! With the `parallel` feature (on by default) the parallel strategy fans
//! out over rayon's thread pool; without it, both strategies run
//! sequentially and produce identical results.

#[cfg(feature = "parallel")]
use rayon::prelude::*;

use crate::error::Result;

/// How to run an independent per-item loop.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Parallelism {
    Sequential,
    #[default]
    Parallel,
}

/// Index-aware ordered map; results line up with `items`.
pub(crate) fn try_map_ordered<T, U, F>(par: Parallelism, items: &[T], f: F) -> Result<Vec<U>>
where
    T: Sync,
    U: Send,
    F: Fn(usize, &T) -> Result<U> + Sync,
{
    match par {
        #[cfg(feature = "parallel")]
        Parallelism::Parallel => items
            .par_iter()
            .enumerate()
            .map(|(i, item)| f(i, item))
            .collect(),
        _ => items.iter().enumerate().map(|(i, item)| f(i, item)).collect(),
    }
}
