//! Deterministic random streams.
//!
//! Every stochastic routine takes a `seed` plus a stream index (trial, point
//! block, ...) so that results do not depend on scheduling.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type Rng = ChaCha8Rng;

/// Stream `stream` of the generator keyed by `seed`.
pub fn stream(seed: u64, stream: u64) -> Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Two-level stream: `(seed, outer, inner)` mapped onto a single stream id.
pub fn substream(seed: u64, outer: u64, inner: u64) -> Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ outer.wrapping_mul(0x9E37_79B9_7F4A_7C15));
    rng.set_stream(inner);
    rng
}

/// A child seed for trial `index`, independent of how trials are scheduled.
pub fn derive(seed: u64, index: u64) -> u64 {
    use rand::RngCore;
    stream(seed, index).next_u64()
}
