//! Analytical and Monte-Carlo models for cell-free integrated sensing and
//! communication (CF-ISAC) networks.
//!
//! A deployment has `M` downlink APs that serve `K` single-antenna users
//! while steering sensing beams toward `T` targets, and `N` uplink APs that
//! combine the target echoes. Every AP carries an `L`-element array.
//!
//! The crate is `no_std` (it needs `alloc`) and is organized bottom-up:
//!
//! * [`scenario`]: configuration, entity placement, UMi path loss, noise.
//! * [`channel`]: Rayleigh channel sets and channel-hardening statistics.
//! * [`beamforming`]: MRT/MRC precoders, steering vectors, ISAC superposition.
//! * [`performance`]: closed-form and Monte-Carlo SINR/SE, leakage, UatF.
//! * [`sensing`]: beampattern gains, sensing mutual information, FIM/CRB.
//! * [`optimizer`]: sum-SE beamforming design under power, beampattern and
//!   leakage constraints.
//!
//! IO, experiment orchestration and the CLI live in the `cfisac` crate.
#![no_std]
// `!(x > 0.0)` is the NaN-rejecting form used by every argument check.
#![allow(clippy::neg_cmp_op_on_partial_ord)]
// Loops over AP, user and target indices address several tables at once.
#![allow(clippy::needless_range_loop)]

extern crate alloc;

pub mod beamforming;
pub mod channel;
mod error;
pub mod linalg;
pub mod optimizer;
pub mod performance;
pub mod rng;
pub mod scenario;
pub mod sensing;
pub mod stats;

pub use error::{Error, Result};
pub use num_complex::Complex64;

/// Complex column vector used for every per-AP channel, precoder and combiner.
pub type CVector = nalgebra::DVector<Complex64>;
/// Dense complex matrix.
pub type CMatrix = nalgebra::DMatrix<Complex64>;
