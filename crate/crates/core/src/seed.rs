//! Seed derivation. Every stochastic stage gets its own stream derived from
//! the master seed, a stage name and an index, so results never depend on
//! scheduling order.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type StageRng = ChaCha8Rng;

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Stable 64-bit hash of `(seed, stage, index)`.
pub fn derive(seed: u64, stage: &str, index: u64) -> u64 {
    // FNV-1a over the stage name
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for b in stage.bytes() {
        h ^= u64::from(b);
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    splitmix64(splitmix64(seed ^ h).wrapping_add(splitmix64(index)))
}

pub fn rng(seed: u64, stage: &str, index: u64) -> StageRng {
    StageRng::seed_from_u64(derive(seed, stage, index))
}

pub fn rng_from(seed: u64) -> StageRng {
    StageRng::seed_from_u64(seed)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn derive_separates_stages_and_indices() {
        assert_eq!(derive(7, "shadow", 3), derive(7, "shadow", 3));
        assert_ne!(derive(7, "shadow", 3), derive(7, "shadow", 4));
        assert_ne!(derive(7, "shadow", 3), derive(7, "target", 3));
        assert_ne!(derive(7, "shadow", 3), derive(8, "shadow", 3));
    }
}
