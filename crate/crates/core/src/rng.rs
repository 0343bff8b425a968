//! Seeded random streams.
//!
//! Every random draw in the toolkit comes from a ChaCha8 stream. Independent
//! consumers derive their own stream from one root seed plus a name and an
//! index, so adding a consumer never perturbs the draws of another.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use sha2::{Digest, Sha256};

pub type BwRng = ChaCha8Rng;

pub fn seeded(seed: u64) -> BwRng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn substream(seed: u64, name: &str, index: u64) -> BwRng {
    let mut hasher = Sha256::new();
    hasher.update(seed.to_le_bytes());
    hasher.update((name.len() as u64).to_le_bytes());
    hasher.update(name.as_bytes());
    hasher.update(index.to_le_bytes());
    let digest = hasher.finalize();
    let mut key = [0u8; 32];
    key.copy_from_slice(&digest[..32]);
    ChaCha8Rng::from_seed(key)
}
