//! Keyed random streams: every (seed, entity, purpose, time) tuple gets its
//! own generator, so adding users or changing sweep values leaves the draws
//! of everyone else untouched.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Domain tags for [`stream`] keys.
pub mod tag {
    pub const CUE_DROP: u64 = 1;
    pub const PAIR_DROP: u64 = 2;
    pub const CUE_MOBILITY: u64 = 3;
    pub const PAIR_MOBILITY: u64 = 4;
    pub const SHADOW_BS: u64 = 5;
    pub const SHADOW_D2D_RX: u64 = 6;
    pub const FADING: u64 = 7;
    pub const INSTANCE: u64 = 8;
}

fn splitmix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Generator for `seed` and an ordered key path.
pub fn stream(seed: u64, key: &[u64]) -> ChaCha8Rng {
    let mixed = key.iter().fold(splitmix(seed), |acc, &k| splitmix(acc ^ splitmix(k)));
    ChaCha8Rng::seed_from_u64(mixed)
}
