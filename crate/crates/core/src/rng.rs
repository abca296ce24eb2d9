//! Counter-keyed deterministic random streams.
//!
//! Every random quantity in this crate is drawn from a stream addressed by
//! `(master_seed, domain, a, b)` rather than from shared mutable RNG state.
//! Streams can therefore be opened in any order and on any thread and still
//! produce identical values, which is what makes training trajectories
//! independent of the worker-thread count.

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Domain separators so unrelated consumers never share a stream.
pub mod domain {
    /// Weight initialization, keyed per layer.
    pub const INIT: u64 = 0x01;
    /// Perturbation direction vectors, keyed per (generation, pair).
    pub const DIRECTIONS: u64 = 0x02;
    /// Synthetic community assignments, keyed per class.
    pub const SYNTH_PARTITION: u64 = 0x03;
    /// Synthetic per-subject noise, keyed per (class/split, subject).
    pub const SYNTH_NOISE: u64 = 0x04;
}

fn splitmix64(state: &mut u64) -> u64 {
    *state = state.wrapping_add(0x9E37_79B9_7F4A_7C15);
    let mut z = *state;
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Opens the stream addressed by `(master_seed, domain, a, b)`.
///
/// The key is derived by folding the address through SplitMix64, so nearby
/// addresses (e.g. consecutive generations) yield unrelated keys.
pub fn stream(master_seed: u64, domain: u64, a: u64, b: u64) -> ChaCha8Rng {
    let mut state = 0x243F_6A88_85A3_08D3u64; // arbitrary nonzero start
    for part in [master_seed, domain, a, b] {
        state ^= part;
        splitmix64(&mut state);
    }
    let mut key = [0u8; 32];
    for chunk in key.chunks_exact_mut(8) {
        chunk.copy_from_slice(&splitmix64(&mut state).to_le_bytes());
    }
    ChaCha8Rng::from_seed(key)
}
