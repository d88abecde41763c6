//! Named random sub-streams derived from one top-level seed, so that adding
//! a stage never shifts another stage's draws.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use sha2::{Digest, Sha256};

/// Seed for the sub-stream `name` of `seed`.
pub fn substream_seed(seed: u64, name: &str) -> u64 {
    let mut h = Sha256::new();
    h.update(seed.to_le_bytes());
    h.update(name.as_bytes());
    let digest = h.finalize();
    let mut b = [0u8; 8];
    b.copy_from_slice(&digest[..8]);
    u64::from_le_bytes(b)
}

pub fn substream(seed: u64, name: &str) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(substream_seed(seed, name))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn names_separate_streams() {
        assert_eq!(substream_seed(7, "shots"), substream_seed(7, "shots"));
        assert_ne!(substream_seed(7, "shots"), substream_seed(7, "bootstrap"));
        assert_ne!(substream_seed(7, "shots"), substream_seed(8, "shots"));
    }
}
