//! Reproducible keying of random streams.
//!
//! A key is derived from `(master seed, replica index, stream label)` as
//!
//! ```text
//! h   = FNV-1a-64(label bytes)
//! key = fmix(fmix(master ^ h) ^ replica)
//! ```
//!
//! where `fmix` is the SplitMix64 finalizer
//! (`z ^= z >> 30; z *= 0xbf58476d1ce4e5b9; z ^= z >> 27; z *= 0x94d049bb133111eb; z ^= z >> 31`)
//! applied after adding the golden-ratio increment `0x9e3779b97f4a7c15`.
//! `fmix` is a bijection on `u64`, so for a fixed `(master, label)` distinct
//! replicas always receive distinct keys.
//!
//! Each key seeds a ChaCha8 generator (`rand_core::SeedableRng::seed_from_u64`).
//! Within a replica the time step selects the ChaCha stream (nonce) and the
//! draws within a step are taken mode-major from word position 0, so a
//! Gaussian increment is a pure function of `(key, step, mode)`.

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct RngKey(pub u64);

const FNV_OFFSET: u64 = 0xcbf2_9ce4_8422_2325;
const FNV_PRIME: u64 = 0x0000_0100_0000_01b3;

pub fn fnv1a(bytes: &[u8]) -> u64 {
    bytes.iter().fold(FNV_OFFSET, |h, &b| (h ^ u64::from(b)).wrapping_mul(FNV_PRIME))
}

pub fn splitmix64(x: u64) -> u64 {
    let mut z = x.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

pub fn derive_key(master: u64, replica: u64, stream: &str) -> RngKey {
    RngKey(splitmix64(splitmix64(master ^ fnv1a(stream.as_bytes())) ^ replica))
}
