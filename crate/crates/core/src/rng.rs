//! Seed derivation and sampling helpers.
//!
//! All randomness flows from ChaCha8 streams whose 64-bit seeds are derived
//! with [`derive_seed`], so any unit of work (a sampling round, a matrix
//! cell) can be regenerated on its own, in any order, on any thread.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

const GOLDEN: u64 = 0x9E37_79B9_7F4A_7C15;

/// SplitMix64 output function (Steele, Lea & Flood).
pub fn mix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// `mix64(mix64(master + GOLDEN * (stream + 1)) ^ (counter * GOLDEN))`.
///
/// `stream` separates independent uses of one master seed; `counter` indexes
/// work items within a stream.
pub fn derive_seed(master: u64, stream: u64, counter: u64) -> u64 {
    let s = mix64(master.wrapping_add(GOLDEN.wrapping_mul(stream.wrapping_add(1))));
    mix64(s ^ counter.wrapping_mul(GOLDEN))
}

pub fn stream_rng(master: u64, stream: u64, counter: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(derive_seed(master, stream, counter))
}

/// `n` distinct indices from `0..m`, uniformly, returned in ascending order.
pub fn sample_indices(rng: &mut ChaCha8Rng, m: usize, n: usize) -> Vec<usize> {
    let mut picked = rand::seq::index::sample(rng, m, n).into_vec();
    picked.sort_unstable();
    picked
}
