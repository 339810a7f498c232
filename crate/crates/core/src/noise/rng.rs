//! Reproducible random streams.
//!
//! Every stream is a ChaCha20 generator keyed by
//! `SHA-256(master_seed as 8 little-endian bytes ‖ key)`, where `key` is a
//! canonical string naming the consumer (for sweeps, the parameter tuple of
//! the point). Streams are therefore independent of evaluation order and
//! thread count.

use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use sha2::{Digest, Sha256};

/// 32-byte seed of the stream `key` under `master_seed`.
pub fn stream_seed(master_seed: u64, key: &str) -> [u8; 32] {
    let mut h = Sha256::new();
    h.update(master_seed.to_le_bytes());
    h.update(key.as_bytes());
    h.finalize().into()
}

/// First eight seed bytes as an integer, used to label a stream in tables.
pub fn stream_id(master_seed: u64, key: &str) -> u64 {
    let s = stream_seed(master_seed, key);
    u64::from_le_bytes(s[..8].try_into().expect("8 bytes"))
}

pub fn stream_rng(master_seed: u64, key: &str) -> ChaCha20Rng {
    ChaCha20Rng::from_seed(stream_seed(master_seed, key))
}
