//! Seed derivation for reproducible, schedule-independent simulation streams.
//!
//! Every simulated record gets its own generator derived from
//! `(master seed, record index)`, so tables can be generated in parallel in
//! any order and still come out bit-identical.

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// The generator used for all simulation. ChaCha has a stable output stream
/// across library versions, which the reproducibility guarantees rely on.
pub type SimRng = ChaCha8Rng;

/// SplitMix64 step; the standard finalizer keeps nearby seeds uncorrelated.
fn splitmix64(state: &mut u64) -> u64 {
    *state = state.wrapping_add(0x9E37_79B9_7F4A_7C15);
    let mut z = *state;
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Derive the generator for one record of a stream.
pub fn stream_rng(master_seed: u64, index: u64) -> SimRng {
    let mut state = master_seed ^ index.wrapping_mul(0xA076_1D64_78BD_642F);
    let mut seed = [0u8; 32];
    for chunk in seed.chunks_exact_mut(8) {
        chunk.copy_from_slice(&splitmix64(&mut state).to_le_bytes());
    }
    SimRng::from_seed(seed)
}

/// Mix a fixed tag into a master seed, separating independent purposes
/// (e.g. ancillary coordinates) that share one user-facing seed.
pub fn tagged_seed(master_seed: u64, tag: u64) -> u64 {
    let mut state = master_seed ^ tag.wrapping_mul(0xD6E8_FEB8_6659_FD93);
    splitmix64(&mut state)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    #[test]
    fn streams_are_reproducible() {
        let mut a = stream_rng(42, 7);
        let mut b = stream_rng(42, 7);
        let xs: Vec<u64> = (0..8).map(|_| a.random()).collect();
        let ys: Vec<u64> = (0..8).map(|_| b.random()).collect();
        assert_eq!(xs, ys);
    }

    #[test]
    fn streams_differ_across_indices_and_seeds() {
        let x: u64 = stream_rng(42, 0).random();
        let y: u64 = stream_rng(42, 1).random();
        let z: u64 = stream_rng(43, 0).random();
        assert_ne!(x, y);
        assert_ne!(x, z);
    }

    #[test]
    fn tagged_seed_changes_stream() {
        assert_ne!(tagged_seed(1, 2), tagged_seed(1, 3));
        assert_ne!(tagged_seed(1, 2), 1);
    }
}
