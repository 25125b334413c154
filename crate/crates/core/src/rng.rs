//! Deterministic seed derivation and RNG construction.
//!
//! Every stochastic routine in this crate takes an explicit seed so that a
//! run is reproducible from its config alone. Derived seeds (per epoch, per
//! view, per layer) are mixed through `hash_seeds` rather than arithmetic
//! offsets so that nearby seeds do not produce correlated streams.

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// splitmix64 finalizer; full-period mixing of a 64-bit state.
fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Combines an ordered list of seed components into one 64-bit seed.
pub fn hash_seeds(parts: &[u64]) -> u64 {
    let mut acc = 0x51_7c_c1_b7_27_22_0a_95u64;
    for &p in parts {
        acc = splitmix64(acc ^ splitmix64(p));
    }
    acc
}

/// Seed for one augmentation view: mixes (epoch, base_seed, view_index).
pub fn view_seed(epoch: u64, base_seed: u64, view_index: u64) -> u64 {
    hash_seeds(&[epoch, base_seed, view_index])
}

/// Deterministic RNG from a 64-bit seed.
pub fn rng_from_seed(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}
