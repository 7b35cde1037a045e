//! Deterministic stream derivation.
//!
//! Every random draw in a run comes from a ChaCha stream whose 256-bit seed
//! is a hash of (master seed, domain tag, indices). Any single draw site
//! (the shared projection basis, a partition shuffle, the noise injected at
//! one round/client visit) can therefore be replayed in isolation without
//! re-running anything that preceded it.

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha12Rng;
use sha2::{Digest, Sha256};

/// Derive an isolated RNG stream from a master seed, a domain tag, and
/// zero or more indices (round, client, replicate number, ...).
pub fn derive_stream(master_seed: u64, domain: &str, indices: &[u64]) -> ChaCha12Rng {
    ChaCha12Rng::from_seed(derive_seed_bytes(master_seed, domain, indices))
}

/// Derive a u64 sub-seed, for places that need a seed rather than a stream
/// (dataset generation, sweep sub-runs).
pub fn derive_subseed(master_seed: u64, domain: &str, indices: &[u64]) -> u64 {
    let bytes = derive_seed_bytes(master_seed, domain, indices);
    u64::from_le_bytes(bytes[..8].try_into().unwrap())
}

fn derive_seed_bytes(master_seed: u64, domain: &str, indices: &[u64]) -> [u8; 32] {
    let mut hasher = Sha256::new();
    hasher.update(master_seed.to_le_bytes());
    hasher.update([domain.len() as u8]);
    hasher.update(domain.as_bytes());
    for ix in indices {
        hasher.update(ix.to_le_bytes());
    }
    hasher.finalize().into()
}
