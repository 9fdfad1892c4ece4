//! Deterministic replication over a rayon pool.
//!
//! Work item `i` only ever sees randomness derived from `(seed, i)` and the
//! results are collected in index order, so the output does not depend on
//! the number of threads.

use rayon::prelude::*;

/// Runs `f(0..count)` in parallel and returns the results in index order.
pub fn replicate<T, F>(count: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(u64) -> T + Sync + Send,
{
    (0..count as u64).into_par_iter().map(f).collect()
}

/// Runs `f` inside a dedicated pool of `threads` workers, or in the global
/// pool when `threads` is `None`.
pub fn with_threads<R, F>(threads: Option<usize>, f: F) -> R
where
    R: Send,
    F: FnOnce() -> R + Send,
{
    match threads {
        Some(t) => rayon::ThreadPoolBuilder::new()
            .num_threads(t.max(1))
            .build()
            .expect("thread pool")
            .install(f),
        None => f(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::Seed;
    use rand::Rng;

    #[test]
    fn results_do_not_depend_on_thread_count() {
        let run = |t| {
            with_threads(Some(t), || {
                replicate(500, |i| Seed(3).stream(i).random::<u64>())
            })
        };
        assert_eq!(run(1), run(8));
    }
}
