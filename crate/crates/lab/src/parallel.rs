//! Batched Monte Carlo on the rayon pool. Batch `b` draws from
//! `RngStream(seed, stream_base + b)` and results come back in batch order, so
//! a reduction over them does not depend on scheduling.

use rayon::prelude::*;

use sbvp_core::RngStream;

use crate::error::LabResult;

/// Sizes of the batches covering `total` items.
pub fn batch_sizes(total: u64, batch: u64) -> Vec<u64> {
    let full = total / batch;
    let mut out = vec![batch; full as usize];
    if !total.is_multiple_of(batch) {
        out.push(total % batch);
    }
    out
}

pub fn run_batches<T, F>(seed: u64, stream_base: u64, total: u64, batch: u64, f: F) -> LabResult<Vec<T>>
where
    T: Send,
    F: Fn(&mut RngStream, u64) -> LabResult<T> + Sync + Send,
{
    batch_sizes(total, batch)
        .into_par_iter()
        .enumerate()
        .map(|(b, n)| {
            let mut rng = RngStream::new(seed, stream_base + b as u64);
            f(&mut rng, n)
        })
        .collect()
}

/// Order-preserving parallel map.
pub fn par_map<A, T, F>(items: &[A], f: F) -> LabResult<Vec<T>>
where
    A: Sync,
    T: Send,
    F: Fn(&A) -> LabResult<T> + Sync + Send,
{
    items.par_iter().map(f).collect()
}
