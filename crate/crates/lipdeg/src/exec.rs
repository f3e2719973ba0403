//! Data-parallel helpers. With the `parallel` feature these fan out over the
//! rayon pool; without it they run the same closures in order. Results are
//! always collected in index order, so output never depends on scheduling.

#[cfg(feature = "parallel")]
use rayon::prelude::*;

/// `(0..n).map(f).collect()`, possibly in parallel.
pub fn map_range<T, F>(n: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
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

/// Apply `f` to every element (with its index).
pub fn for_each_mut<T, F>(items: &mut [T], f: F)
where
    T: Send,
    F: Fn(usize, &mut T) + Sync + Send,
{
    #[cfg(feature = "parallel")]
    {
        items.par_iter_mut().enumerate().for_each(|(i, x)| f(i, x));
    }
    #[cfg(not(feature = "parallel"))]
    {
        items.iter_mut().enumerate().for_each(|(i, x)| f(i, x));
    }
}

/// Apply `f` to consecutive chunks of length `chunk` (the last may be short).
pub fn for_each_chunk_mut<T, F>(items: &mut [T], chunk: usize, f: F)
where
    T: Send,
    F: Fn(usize, &mut [T]) + Sync + Send,
{
    #[cfg(feature = "parallel")]
    {
        items.par_chunks_mut(chunk).enumerate().for_each(|(i, c)| f(i, c));
    }
    #[cfg(not(feature = "parallel"))]
    {
        items.chunks_mut(chunk).enumerate().for_each(|(i, c)| f(i, c));
    }
}

/// Run `f` on a dedicated pool of `threads` workers. `threads == 0` keeps the
/// global pool. A no-op wrapper in sequential builds.
pub fn with_threads<R: Send, F: FnOnce() -> R + Send>(threads: usize, f: F) -> R {
    #[cfg(feature = "parallel")]
    {
        if threads == 0 {
            return f();
        }
        match rayon::ThreadPoolBuilder::new().num_threads(threads).build() {
            Ok(pool) => pool.install(f),
            Err(_) => f(),
        }
    }
    #[cfg(not(feature = "parallel"))]
    {
        let _ = threads;
        f()
    }
}

/// True when the crate was built with the rayon backend.
pub const fn is_parallel() -> bool {
    cfg!(feature = "parallel")
}
