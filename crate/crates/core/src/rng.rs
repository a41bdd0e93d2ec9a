//! Seed derivation and counter-based random draws.
//!
//! Everything stochastic in the crate is keyed by an explicit 64-bit seed. Draws that must be
//! addressable out of order (scenario noise, exploration windows) use a ChaCha stream positioned
//! by a counter, so the value for a given `(seed, stream, counter)` never depends on call order.

use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

/// SplitMix64 finaliser.
pub fn mix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Derives an independent child seed from `seed` and a tag.
pub fn derive_seed(seed: u64, tag: u64) -> u64 {
    mix64(seed ^ mix64(tag))
}

/// Sequential generator used by simulations and learners.
pub fn seeded(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn positioned(seed: u64, stream: u64, counter: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    // 16 words of headroom per counter value; the normal sampler occasionally rejects.
    rng.set_word_pos(u128::from(counter) * 16);
    rng
}

/// Standard normal draw addressed by `(seed, stream, counter)`.
pub fn counter_normal(seed: u64, stream: u64, counter: u64) -> f64 {
    positioned(seed, stream, counter).sample(StandardNormal)
}

/// Uniform draw in `[0, 1)` addressed by `(seed, stream, counter)`.
pub fn counter_uniform(seed: u64, stream: u64, counter: u64) -> f64 {
    let bits = positioned(seed, stream, counter).next_u64() >> 11;
    bits as f64 / (1u64 << 53) as f64
}
