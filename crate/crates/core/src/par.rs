//! Deterministic fork-join over fixed chunk indices.
//!
//! Work is split into a fixed number of chunks independent of the worker
//! count; results are folded in chunk order, so the outcome (including any
//! per-chunk statistics) does not depend on scheduling.

use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

/// Number of workers to use for `jobs = None` (all available parallelism).
pub fn default_jobs() -> usize {
    std::thread::available_parallelism()
        .map(|n| n.get())
        .unwrap_or(1)
}

/// Runs `map(chunk_index)` for every chunk on `jobs` workers and folds the
/// results in chunk order.
pub fn map_reduce<R, FM, FR>(n_chunks: usize, jobs: usize, map: FM, mut fold: FR, init: R) -> R
where
    R: Send,
    FM: Fn(usize) -> R + Sync,
    FR: FnMut(R, R) -> R,
{
    let jobs = jobs.max(1).min(n_chunks.max(1));
    if n_chunks == 0 {
        return init;
    }
    if jobs == 1 {
        let mut acc = init;
        for i in 0..n_chunks {
            acc = fold(acc, map(i));
        }
        return acc;
    }
    let next = AtomicUsize::new(0);
    let results: Mutex<Vec<Option<R>>> = Mutex::new((0..n_chunks).map(|_| None).collect());
    std::thread::scope(|scope| {
        for _ in 0..jobs {
            scope.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::Relaxed);
                if i >= n_chunks {
                    break;
                }
                let r = map(i);
                results.lock().unwrap()[i] = Some(r);
            });
        }
    });
    let mut acc = init;
    for r in results.into_inner().unwrap() {
        acc = fold(acc, r.expect("chunk not computed"));
    }
    acc
}
