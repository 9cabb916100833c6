//! Execution helpers for the data-parallel hot loops.
//!
//! Every heavy loop in the crate (per-hyperedge prox/gradient work, per-node
//! updates, matmul rows) is expressed as a map over independent output
//! elements. With the `parallel` feature the maps run on rayon; without it
//! they run sequentially. Because each output element is produced by exactly
//! one task and all reductions inside a task run in a fixed order, results
//! are bit-identical across the two paths and across worker counts.
//!
//! [`force_sequential`] flips the parallel path off at runtime, which is how
//! the benchmark suite compares both paths within one build.

use std::sync::atomic::{AtomicBool, Ordering};

static FORCE_SEQUENTIAL: AtomicBool = AtomicBool::new(false);

/// Route all subsequent maps through the sequential path (even when the
/// `parallel` feature is enabled). Intended for benchmarks and A/B tests.
pub fn force_sequential(on: bool) {
    FORCE_SEQUENTIAL.store(on, Ordering::SeqCst);
}

pub fn sequential_forced() -> bool {
    FORCE_SEQUENTIAL.load(Ordering::SeqCst)
}

/// Map `f` over `0..n`, collecting results in index order.
pub fn map_collect<T, F>(n: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    #[cfg(feature = "parallel")]
    {
        if !sequential_forced() {
            use rayon::prelude::*;
            return (0..n).into_par_iter().map(f).collect();
        }
    }
    map_collect_seq(n, f)
}

/// Always-sequential variant of [`map_collect`].
pub fn map_collect_seq<T, F>(n: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    (0..n).map(f).collect()
}

/// Apply `f(i, chunk_i)` to disjoint `chunk_len`-sized chunks of `data`
/// (the last chunk may be shorter). Chunk `i` covers
/// `data[i*chunk_len .. min((i+1)*chunk_len, len)]`.
pub fn for_each_chunk_mut<F>(data: &mut [f64], chunk_len: usize, f: F)
where
    F: Fn(usize, &mut [f64]) + Sync + Send,
{
    assert!(chunk_len > 0, "chunk_len must be positive");
    #[cfg(feature = "parallel")]
    {
        if !sequential_forced() {
            use rayon::prelude::*;
            data.par_chunks_mut(chunk_len)
                .enumerate()
                .for_each(|(i, c)| f(i, c));
            return;
        }
    }
    data.chunks_mut(chunk_len).enumerate().for_each(|(i, c)| f(i, c));
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn map_matches_sequential_bitwise() {
        let f = |i: usize| (i as f64).sin() * 1e3 + 1.0 / (i as f64 + 0.5);
        let auto = map_collect(1000, f);
        let seq = map_collect_seq(1000, f);
        assert_eq!(auto, seq);
    }

    #[test]
    fn forced_sequential_matches() {
        let f = |i: usize| (i as f64).sqrt();
        let a = map_collect(100, f);
        force_sequential(true);
        let b = map_collect(100, f);
        force_sequential(false);
        assert_eq!(a, b);
    }

    #[test]
    fn chunked_writes_cover_all_elements() {
        let mut data = vec![0.0; 103];
        for_each_chunk_mut(&mut data, 10, |i, chunk| {
            for (j, x) in chunk.iter_mut().enumerate() {
                *x = (i * 10 + j) as f64;
            }
        });
        for (k, x) in data.iter().enumerate() {
            assert_eq!(*x, k as f64);
        }
    }
}
