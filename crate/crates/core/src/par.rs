//! Replicate-level data parallelism.
//!
//! With the `parallel` feature (default) replicate loops run on the rayon pool;
//! without it they run sequentially. Results are always collected in replicate
//! order and reduced sequentially afterwards, so outputs do not depend on the
//! number of workers.

#[cfg(feature = "parallel")]
use rayon::prelude::*;

use crate::rng::{Rng, StreamKey};

/// Maps `f` over `0..len`, preserving order.
#[cfg(feature = "parallel")]
pub fn map_indexed<T, F>(len: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    (0..len).into_par_iter().map(f).collect()
}

#[cfg(not(feature = "parallel"))]
pub fn map_indexed<T, F>(len: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    map_indexed_seq(len, f)
}

/// The sequential fallback, always available.
pub fn map_indexed_seq<T, F>(len: usize, f: F) -> Vec<T>
where
    F: Fn(usize) -> T,
{
    (0..len).map(f).collect()
}

/// Runs `reps` replicates, replicate `i` drawing from `key.rng(i)`.
pub fn replicate<T, F>(key: StreamKey, reps: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(&mut Rng) -> T + Sync + Send,
{
    map_indexed(reps, |i| f(&mut key.rng(i as u64)))
}

/// Runs `f` on a dedicated pool with `threads` workers (0 = rayon default).
/// Without the `parallel` feature this just calls `f`.
pub fn with_threads<R, F>(threads: usize, f: F) -> R
where
    R: Send,
    F: FnOnce() -> R + Send,
{
    #[cfg(feature = "parallel")]
    {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .expect("failed to build rayon thread pool");
        pool.install(f)
    }
    #[cfg(not(feature = "parallel"))]
    {
        let _ = threads;
        f()
    }
}
