//! Seed derivation. All randomness flows from one root seed through keyed
//! sub-streams, so results do not depend on scheduling order.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type StreamRng = ChaCha8Rng;

const FNV_OFFSET: u64 = 0xcbf2_9ce4_8422_2325;
const FNV_PRIME: u64 = 0x0000_0100_0000_01b3;

/// FNV-1a over a sequence of byte strings, with a separator between parts.
pub fn fnv1a(parts: &[&[u8]]) -> u64 {
    let mut h = FNV_OFFSET;
    for part in parts {
        for &b in *part {
            h ^= u64::from(b);
            h = h.wrapping_mul(FNV_PRIME);
        }
        h ^= 0xff;
        h = h.wrapping_mul(FNV_PRIME);
    }
    h
}

/// Seed for the stream identified by `(root, parts...)`.
pub fn derive_seed(root: u64, parts: &[&str]) -> u64 {
    let root_bytes = root.to_le_bytes();
    let mut all: [&[u8]; 8] = [&[]; 8];
    all[0] = &root_bytes;
    let n = parts.len().min(7);
    for (slot, p) in all[1..=n].iter_mut().zip(parts) {
        *slot = p.as_bytes();
    }
    fnv1a(&all[..=n])
}

pub fn stream(root: u64, parts: &[&str]) -> StreamRng {
    StreamRng::seed_from_u64(derive_seed(root, parts))
}
