//! Reductions whose result does not depend on the number of worker threads.
//!
//! Inputs are cut into fixed-size blocks. Each block is summed sequentially,
//! blocks run in parallel, and the per-block partials are folded in block
//! order. The partition depends only on the input length, so the rounding
//! pattern is the same for any thread count.

use rayon::prelude::*;

use crate::vec3::Vec3;

/// Elements per reduction block.
pub const BLOCK: usize = 2048;

/// Deterministic parallel sum of `f(item)` over a slice.
pub fn block_sum<T, F>(items: &[T], f: F) -> f64
where
    T: Sync,
    F: Fn(&T) -> f64 + Sync + Send,
{
    let partials: Vec<f64> = items
        .par_chunks(BLOCK)
        .map(|chunk| chunk.iter().map(&f).sum::<f64>())
        .collect();
    partials.into_iter().sum()
}

/// Deterministic parallel sum of `f(index, item)`.
pub fn block_sum_indexed<T, F>(items: &[T], f: F) -> f64
where
    T: Sync,
    F: Fn(usize, &T) -> f64 + Sync + Send,
{
    let partials: Vec<f64> = items
        .par_chunks(BLOCK)
        .enumerate()
        .map(|(b, chunk)| {
            chunk
                .iter()
                .enumerate()
                .map(|(i, t)| f(b * BLOCK + i, t))
                .sum::<f64>()
        })
        .collect();
    partials.into_iter().sum()
}

/// Deterministic parallel vector sum.
pub fn block_sum_vec<T, F>(items: &[T], f: F) -> Vec3
where
    T: Sync,
    F: Fn(&T) -> Vec3 + Sync + Send,
{
    let partials: Vec<Vec3> = items
        .par_chunks(BLOCK)
        .map(|chunk| chunk.iter().fold(Vec3::ZERO, |acc, t| acc + f(t)))
        .collect();
    partials.into_iter().fold(Vec3::ZERO, |a, b| a + b)
}

/// Maximum of `f(item)`. Max is order independent, so no blocking is needed.
pub fn par_max<T, F>(items: &[T], f: F) -> f64
where
    T: Sync,
    F: Fn(&T) -> f64 + Sync + Send,
{
    items
        .par_iter()
        .map(f)
        .reduce(|| f64::NEG_INFINITY, f64::max)
}

pub fn par_min<T, F>(items: &[T], f: F) -> f64
where
    T: Sync,
    F: Fn(&T) -> f64 + Sync + Send,
{
    items.par_iter().map(f).reduce(|| f64::INFINITY, f64::min)
}
