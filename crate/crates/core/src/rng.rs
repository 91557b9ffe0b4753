//! Deterministic random-stream discipline.
//!
//! Every random quantity is drawn from its own ChaCha8 stream. The stream is
//! keyed by the master seed and a 64-bit stream id packed as
//! `kind << 56 | first << 28 | second`, so adding a user or a target never
//! shifts the draws of links that already existed. Monte-Carlo trials get
//! their own master seed through [`trial_seed`], which makes any partition
//! of the trial range reproduce the sequential result.

use crate::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

/// Which family of random draws a stream feeds.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u8)]
pub enum StreamKind {
    Geometry = 1,
    UserChannel = 2,
    DlTargetChannel = 3,
    UlTargetChannel = 4,
    InterApChannel = 5,
    Symbols = 6,
    Noise = 7,
    Statistics = 8,
    Shadowing = 9,
}

const INDEX_MASK: u64 = (1 << 28) - 1;

/// Stream id for `(kind, first, second)`; indices are truncated to 28 bits.
pub fn stream_id(kind: StreamKind, first: usize, second: usize) -> u64 {
    ((kind as u64) << 56) | ((first as u64 & INDEX_MASK) << 28) | (second as u64 & INDEX_MASK)
}

/// A ChaCha8 generator positioned on the child stream of `master`.
pub fn stream_rng(master: u64, kind: StreamKind, first: usize, second: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(master);
    rng.set_stream(stream_id(kind, first, second));
    rng
}

/// SplitMix64 finalizer.
pub fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    x = (x ^ (x >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    x ^ (x >> 31)
}

/// Master seed of Monte-Carlo trial `trial` under experiment seed `master`.
pub fn trial_seed(master: u64, trial: u64) -> u64 {
    splitmix64(master ^ splitmix64(trial.wrapping_add(0xD1B5_4A32_D192_ED03)))
}

/// One draw of CN(0, 1).
#[inline]
pub fn complex_normal<R: Rng + ?Sized>(rng: &mut R) -> Complex64 {
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    Complex64::new(re, im) * core::f64::consts::FRAC_1_SQRT_2
}
