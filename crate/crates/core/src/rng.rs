//! Named random streams derived from one top-level seed.
//!
//! Every consumer of randomness asks for a stream by label, e.g.
//! `"sampling/model=fictitious/block=7"`. The stream depends only on the
//! top-level seed and the label, so results do not change with thread count
//! or with the order in which streams are requested.

use rand::SeedableRng;
use rand_pcg::Pcg64Mcg;
use sha2::{Digest, Sha256};

pub type StreamRng = Pcg64Mcg;

fn digest(seed: u64, label: &str) -> [u8; 32] {
    let mut h = Sha256::new();
    h.update(seed.to_le_bytes());
    h.update(label.as_bytes());
    h.finalize().into()
}

/// A 64-bit seed for the sub-stream `label`.
pub fn derive_seed(seed: u64, label: &str) -> u64 {
    let d = digest(seed, label);
    u64::from_le_bytes(d[..8].try_into().expect("8 bytes"))
}

/// A generator for the sub-stream `label`.
pub fn stream(seed: u64, label: &str) -> StreamRng {
    let d = digest(seed, label);
    StreamRng::from_seed(d[..16].try_into().expect("16 bytes"))
}
