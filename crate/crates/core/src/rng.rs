//! Seeded random streams.
//!
//! One user-facing seed expands into independent ChaCha streams: stream 0 for
//! data generation, stream `1 + k` for search chain `k`. Replicates of an
//! experiment each get their own seed derived from the user-facing one.

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub type StreamRng = ChaCha8Rng;

pub const GENERATION_STREAM: u64 = 0;

pub fn chain_stream(chain: u64) -> u64 {
    1 + chain
}

/// Deterministic generator for `(seed, stream)`.
pub fn substream(seed: u64, stream: u64) -> StreamRng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Seed of replicate `replicate`, drawn from a stream reserved for the purpose.
pub fn replicate_seed(seed: u64, replicate: u64) -> u64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(u64::MAX);
    rng.set_word_pos(u128::from(replicate) * 2);
    rng.next_u64()
}
