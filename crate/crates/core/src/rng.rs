//! Keyed random substreams.
//!
//! Every random quantity in the crate is drawn from a ChaCha stream whose
//! key is derived from `(seed, k0, k1, ...)`. Replica `r` of an experiment
//! always sees the same stream no matter which worker thread runs it.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type StreamRng = ChaCha8Rng;

#[inline]
fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Returns the stream for `(seed, keys...)`.
pub fn substream(seed: u64, keys: &[u64]) -> StreamRng {
    let mut state = splitmix64(seed ^ 0x6A09_E667_F3BC_C908);
    for &k in keys {
        state = splitmix64(state ^ splitmix64(k.wrapping_add(0x3C6E_F372_FE94_F82B)));
    }
    let mut key = [0u8; 32];
    for (i, chunk) in key.chunks_exact_mut(8).enumerate() {
        state = splitmix64(state.wrapping_add(i as u64));
        chunk.copy_from_slice(&state.to_le_bytes());
    }
    ChaCha8Rng::from_seed(key)
}
