//! Deterministic per-task seed derivation.
//!
//! Every stochastic stage draws from its own ChaCha stream keyed by a hash of
//! the run seed and the task identity, so results do not depend on thread
//! scheduling.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use sha2::{Digest, Sha256};

/// Identity component of a derived seed.
#[derive(Debug, Clone, Copy)]
pub enum SeedPart<'a> {
    Tag(&'a str),
    Text(&'a str),
    Int(u64),
    Real(f64),
}

pub fn derive_seed(base: u64, parts: &[SeedPart<'_>]) -> [u8; 32] {
    let mut h = Sha256::new();
    h.update(base.to_le_bytes());
    for p in parts {
        match *p {
            SeedPart::Tag(s) => {
                h.update([0u8]);
                h.update((s.len() as u64).to_le_bytes());
                h.update(s.as_bytes());
            }
            SeedPart::Text(s) => {
                h.update([1u8]);
                h.update((s.len() as u64).to_le_bytes());
                h.update(s.as_bytes());
            }
            SeedPart::Int(v) => {
                h.update([2u8]);
                h.update(v.to_le_bytes());
            }
            SeedPart::Real(v) => {
                h.update([3u8]);
                h.update(v.to_bits().to_le_bytes());
            }
        }
    }
    h.finalize().into()
}

pub fn task_rng(base: u64, parts: &[SeedPart<'_>]) -> ChaCha8Rng {
    ChaCha8Rng::from_seed(derive_seed(base, parts))
}
