//! Data-parallel execution with a sequential fallback.
//!
//! With the `parallel` feature (on by default) batch work is spread over a
//! rayon pool. Without it, or with [`Execution::Sequential`], the same closures
//! run in a plain loop. Results are always returned in index order, so the
//! choice never changes output.

#[cfg(feature = "parallel")]
use rayon::prelude::*;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum Execution {
    Sequential,
    #[default]
    Parallel,
}

impl Execution {
    /// True when work will actually be spread across threads.
    pub fn is_parallel(self) -> bool {
        cfg!(feature = "parallel") && self == Execution::Parallel
    }
}

/// Evaluates `f(0), …, f(count - 1)` and returns the results in index order.
pub fn map_indexed<T, F>(exec: Execution, count: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    #[cfg(feature = "parallel")]
    if exec.is_parallel() {
        return (0..count).into_par_iter().map(f).collect();
    }
    let _ = exec;
    (0..count).map(f).collect()
}

/// Max-reduction over `f(0), …, f(count - 1)`; returns `None` for `count == 0`.
pub fn max_indexed<F>(exec: Execution, count: usize, f: F) -> Option<f64>
where
    F: Fn(usize) -> f64 + Sync + Send,
{
    map_indexed(exec, count, f).into_iter().reduce(f64::max)
}

/// Runs `op` on a dedicated pool of `threads` workers (0 = rayon default).
///
/// Without the `parallel` feature this simply calls `op`.
pub fn with_threads<R, F>(threads: usize, op: F) -> R
where
    R: Send,
    F: FnOnce() -> R + Send,
{
    #[cfg(feature = "parallel")]
    {
        if threads > 0 {
            if let Ok(pool) = rayon::ThreadPoolBuilder::new().num_threads(threads).build() {
                return pool.install(op);
            }
        }
        op()
    }
    #[cfg(not(feature = "parallel"))]
    {
        let _ = threads;
        op()
    }
}
