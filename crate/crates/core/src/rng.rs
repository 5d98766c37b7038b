//! Seed derivation for independent, reproducible random streams.
//!
//! Every stream is a ChaCha8 generator keyed by a 64-bit seed. Sub-streams
//! are derived as `seed ⊕ splitmix64(index)`, so adding a stream never
//! perturbs the others.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type StreamRng = ChaCha8Rng;

/// One step of the SplitMix64 output function.
pub fn splitmix64(x: u64) -> u64 {
    let mut z = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

pub fn substream_seed(seed: u64, index: u64) -> u64 {
    seed ^ splitmix64(index)
}

/// Seed for a named purpose (K-factor draws, phases, ...) disjoint from the
/// index-derived streams.
pub fn domain_seed(seed: u64, domain: &str) -> u64 {
    let tag = domain
        .bytes()
        .fold(0xCBF2_9CE4_8422_2325u64, |h, b| (h ^ b as u64).wrapping_mul(0x0000_0100_0000_01B3));
    splitmix64(seed ^ splitmix64(tag))
}

pub fn stream(seed: u64) -> StreamRng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn substream(seed: u64, index: u64) -> StreamRng {
    stream(substream_seed(seed, index))
}
