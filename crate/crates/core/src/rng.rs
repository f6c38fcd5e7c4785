//! Deterministic per-path random streams.
//!
//! Each Monte Carlo path gets its own generator keyed by `(seed,
//! path_index)` through a counter-based splitting rule, so serial and
//! parallel runs consume identical randomness per path and every result
//! is reproducible bit for bit regardless of worker count.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Weyl increment used by the splitmix64 generator.
const GOLDEN: u64 = 0x9E37_79B9_7F4A_7C15;

/// One step of splitmix64: advances the state and returns a scrambled
/// output word.
pub fn splitmix64(state: &mut u64) -> u64 {
    *state = state.wrapping_add(GOLDEN);
    let mut z = *state;
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Derives the independent stream for one path. The 256-bit ChaCha key is
/// filled from splitmix64 outputs seeded by a mix of the run seed and the
/// path counter, which keeps nearby counters statistically unrelated.
pub fn path_rng(seed: u64, path_index: u64) -> ChaCha8Rng {
    let mut state = seed ^ path_index.wrapping_mul(GOLDEN).wrapping_add(0x1F12_3BB5_159A_55E5);
    let mut key = [0u8; 32];
    for chunk in key.chunks_exact_mut(8) {
        chunk.copy_from_slice(&splitmix64(&mut state).to_le_bytes());
    }
    ChaCha8Rng::from_seed(key)
}
