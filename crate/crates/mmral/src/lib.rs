//! Multi-LEO constellation downlink simulator with an embedded hierarchical
//! multi-armed-bandit resource allocator.
//!
//! Each satellite runs three independent learning agents (transmit power,
//! illuminated beam subset, sub-channel layout) that observe nothing but the
//! throughput produced by their joint choices. The crate is organized
//! bottom-up:
//!
//! - [`config`]    scenario parameters, scale profiles, validation
//! - [`math`]      special functions needed by the antenna model
//! - [`geometry`]  constellation layout, user field, per-iteration kinematics
//! - [`action`]    arm catalogs, policy decoding, constraint checking
//! - [`channel`]   beam gain, path loss, interference, SINR, achievable rates
//! - [`bandit`]    epsilon-greedy tables and their update arithmetic
//! - [`engine`]    the iteration loop tying selection, decoding and feedback
//! - [`preset`]    canned experiment sweeps and their summary outputs
//!
//! Everything is deterministic given a [`config::ScenarioConfig`] and its
//! seed: reruns produce byte-identical CSV outputs.

pub mod action;
pub mod bandit;
pub mod channel;
pub mod config;
pub mod engine;
pub mod geometry;
pub mod math;
pub mod preset;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Deterministic RNG for one purpose-tagged stream derived from the
/// scenario seed. Distinct tags give statistically independent streams, so
/// adding a consumer never perturbs the draws seen by existing ones.
pub fn derive_rng(seed: u64, tag: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed ^ tag.wrapping_mul(0x9e37_79b9_7f4a_7c15))
}
