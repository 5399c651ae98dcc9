//! Deterministic seed derivation.
//!
//! All randomness in the crate flows from a single user-supplied `u64` root
//! seed through named streams (bootstrap, simulation, ...) and per-task
//! indices. Child seeds are produced by two rounds of the SplitMix64 output
//! permutation, which gives good avalanche behaviour on both the stream and
//! index words; each child then seeds an independent ChaCha8 generator.
//! Because a child seed depends only on `(root, stream, index)`, results are
//! independent of thread scheduling, and enlarging a replicate count never
//! perturbs the replicates already drawn.

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Stream tag for bootstrap resampling replicates.
pub const STREAM_BOOTSTRAP: u64 = 1;
/// Stream tag for simulated datasets inside a Monte-Carlo study.
pub const STREAM_SIMULATION: u64 = 2;
/// Stream tag for the per-replication bootstrap seed inside a study.
pub const STREAM_STUDY_BOOT: u64 = 3;

/// SplitMix64 output permutation (finalizer).
#[inline]
fn mix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Derive a child seed for `(stream, index)` under `root`.
pub fn child_seed(root: u64, stream: u64, index: u64) -> u64 {
    let a = mix(root ^ stream.wrapping_mul(0xA24B_AED4_963E_E407));
    mix(a ^ index.wrapping_mul(0x9FB2_1C65_1E98_DF25))
}

/// ChaCha8 generator for a `(stream, index)` child of `root`.
pub fn child_rng(root: u64, stream: u64, index: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(child_seed(root, stream, index))
}
