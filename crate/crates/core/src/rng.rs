//! Seed derivation. Every random stream in the pipeline is keyed by a tuple of
//! identifiers so results do not depend on scheduling or thread count.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use sha2::{Digest, Sha256};

pub type Rng = ChaCha8Rng;

/// One component of a derived seed.
#[derive(Debug, Clone, Copy)]
pub enum SeedPart<'a> {
    Int(u64),
    Str(&'a str),
}

impl From<u64> for SeedPart<'_> {
    fn from(v: u64) -> Self {
        SeedPart::Int(v)
    }
}

impl From<usize> for SeedPart<'_> {
    fn from(v: usize) -> Self {
        SeedPart::Int(v as u64)
    }
}

impl<'a> From<&'a str> for SeedPart<'a> {
    fn from(v: &'a str) -> Self {
        SeedPart::Str(v)
    }
}

pub fn derive_seed(parts: &[SeedPart<'_>]) -> u64 {
    let mut h = Sha256::new();
    for p in parts {
        match p {
            SeedPart::Int(v) => {
                h.update([0u8]);
                h.update(v.to_le_bytes());
            }
            SeedPart::Str(s) => {
                h.update([1u8]);
                h.update((s.len() as u64).to_le_bytes());
                h.update(s.as_bytes());
            }
        }
    }
    let out = h.finalize();
    u64::from_le_bytes(out[..8].try_into().expect("sha256 output is 32 bytes"))
}

pub fn rng_from(parts: &[SeedPart<'_>]) -> Rng {
    Rng::seed_from_u64(derive_seed(parts))
}

pub fn rng(seed: u64) -> Rng {
    Rng::seed_from_u64(seed)
}

#[macro_export]
macro_rules! seed_rng {
    ($($part:expr),+ $(,)?) => {
        $crate::rng::rng_from(&[$($crate::rng::SeedPart::from($part)),+])
    };
}
