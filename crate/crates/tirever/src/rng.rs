//! Deterministic random stream derivation.
//!
//! Every replication of the Monte Carlo harness draws from its own ChaCha12
//! stream derived from (master seed, tag sequence). Streams depend only on
//! those inputs, never on thread scheduling, so results are identical for any
//! worker count. The mixing function below is part of the reproducibility
//! contract: changing it invalidates recorded seeds.

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha12Rng;

/// SplitMix64 finalizer (Stafford variant 13). Bijective on u64.
fn mix64(mut z: u64) -> u64 {
    z ^= z >> 30;
    z = z.wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z ^= z >> 27;
    z = z.wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

const GOLDEN: u64 = 0x9E37_79B9_7F4A_7C15;

/// Derives an independent ChaCha12 stream from a master seed and a tag path
/// (for the harness: [T, strategy tag, replication index]).
pub fn derive_rng(master_seed: u64, tags: &[u64]) -> ChaCha12Rng {
    let mut state = mix64(master_seed ^ GOLDEN);
    for &t in tags {
        state = mix64(state.wrapping_add(GOLDEN) ^ mix64(t));
    }
    let mut seed = [0u8; 32];
    let mut s = state;
    for chunk in seed.chunks_exact_mut(8) {
        s = mix64(s.wrapping_add(GOLDEN));
        chunk.copy_from_slice(&s.to_le_bytes());
    }
    ChaCha12Rng::from_seed(seed)
}
