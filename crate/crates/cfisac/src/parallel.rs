//! Deterministic data parallelism.
//!
//! Work items are independent and seeded by their index, results are
//! collected in index order and reduced sequentially afterwards, so the
//! output does not depend on the number of worker threads.

use std::ops::Range;

use cfisac_core::beamforming::PrecoderRule;
use cfisac_core::channel::LargeScale;
use cfisac_core::performance::{simulate_trials, McOptions, McSamples};
use rayon::prelude::*;

use crate::error::{HarnessError, Result};

/// Trials per Monte-Carlo work item.
pub const TRIAL_CHUNK: u64 = 1000;

/// Runs `f` on a pool of `threads` workers (rayon's default when `None`).
pub fn with_threads<R: Send>(threads: Option<usize>, f: impl FnOnce() -> R + Send) -> Result<R> {
    match threads {
        None => Ok(f()),
        Some(0) => Err(HarnessError::spec("--threads must be at least 1")),
        Some(n) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build()
                .map_err(|e| HarnessError::spec(format!("thread pool: {e}")))?;
            Ok(pool.install(f))
        }
    }
}

/// Order-preserving parallel map.
pub fn par_map<T: Sync, R: Send>(items: &[T], f: impl Fn(&T) -> R + Sync + Send) -> Vec<R> {
    items.par_iter().map(f).collect()
}

/// Like [`par_map`] but stops at the first error in index order.
pub fn try_par_map<T: Sync, R: Send>(items: &[T], f: impl Fn(&T) -> Result<R> + Sync + Send) -> Result<Vec<R>> {
    par_map(items, f).into_iter().collect()
}

fn chunks(trials: u64) -> Vec<Range<u64>> {
    (0..trials.div_ceil(TRIAL_CHUNK)).map(|c| c * TRIAL_CHUNK..((c + 1) * TRIAL_CHUNK).min(trials)).collect()
}

/// [`simulate_trials`] over `0..trials`, split into fixed chunks that run in
/// parallel and are merged in order. Equal to the sequential result.
pub fn simulate_parallel(
    large_scale: &LargeScale,
    rule: &(dyn PrecoderRule + Sync),
    sigma2: f64,
    seed: u64,
    trials: u64,
    opts: &McOptions,
) -> McSamples {
    let parts = par_map(&chunks(trials), |r| simulate_trials(large_scale, rule, sigma2, seed, r.clone(), opts));
    let mut it = parts.into_iter();
    let mut all = it.next().unwrap_or_else(|| simulate_trials(large_scale, rule, sigma2, seed, 0..0, opts));
    for p in it {
        all.append(p);
    }
    all
}
