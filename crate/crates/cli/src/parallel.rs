//! Deterministic fan-out of Monte Carlo stream ranges across the rayon pool.
//!
//! Work is split into fixed-size chunks keyed by stream index and the chunk
//! results are folded in index order, so outputs are byte-identical for any
//! worker count.

use std::ops::Range;

use rayon::prelude::*;

pub(crate) const CHUNK: u64 = 2048;

/// Run `work` over `0..n` in fixed chunks and fold the ordered results.
pub(crate) fn par_fold<A, F>(n: u64, work: F) -> penalise_core::Result<Vec<A>>
where
    A: Send,
    F: Fn(Range<u64>) -> penalise_core::Result<A> + Sync + Send,
{
    let ranges: Vec<Range<u64>> = (0..n)
        .step_by(CHUNK as usize)
        .map(|start| start..(start + CHUNK).min(n))
        .collect();
    ranges.into_par_iter().map(work).collect()
}
