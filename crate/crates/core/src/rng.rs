//! Seeded randomness. Every random draw in the crate comes from a ChaCha8
//! stream keyed by `(seed, stream name)`.

use rand::SeedableRng;
pub use rand_chacha::ChaCha8Rng as Rng;

/// Name recorded in manifests.
pub const ALGORITHM: &str = "ChaCha8 (rand_chacha 0.3), sub-seed = splitmix64(seed ^ fnv1a64(stream))";

fn fnv1a64(s: &str) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for b in s.bytes() {
        h ^= b as u64;
        h = h.wrapping_mul(0x0100_0000_01b3);
    }
    h
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Derives the seed of the named sub-stream.
pub fn sub_seed(seed: u64, stream: &str) -> u64 {
    splitmix64(seed ^ fnv1a64(stream))
}

/// Generator for the named sub-stream of `seed`.
pub fn stream(seed: u64, name: &str) -> Rng {
    Rng::seed_from_u64(sub_seed(seed, name))
}
