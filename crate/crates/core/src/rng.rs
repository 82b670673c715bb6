//! Seed derivation for reproducible parallel sampling.
//!
//! Every random draw in the crate comes from a ChaCha8 stream keyed by
//! `(seed, tag)` and selected by an index, so a sample's randomness
//! depends only on its index and never on worker scheduling.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type StreamRng = ChaCha8Rng;

/// Stream tags. Distinct tags give unrelated key material for one seed.
pub mod tags {
    pub const HAAR_MOMENT: u64 = 0x01;
    pub const HAAR_BLOCK: u64 = 0x02;
    pub const INIT_STATE: u64 = 0x03;
    pub const ENSEMBLE_LEFT: u64 = 0x04;
    pub const ENSEMBLE_RIGHT: u64 = 0x05;
    pub const DATASET: u64 = 0x06;
    pub const PARAMETERS: u64 = 0x07;
    pub const REPLICATE: u64 = 0x08;
    pub const KS_REFERENCE: u64 = 0x09;
    pub const KS_ROTATED: u64 = 0x0a;
    pub const OPERANDS: u64 = 0x0b;
    pub const SVM_DATA: u64 = 0x0c;
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Deterministic 64-bit child seed for `(seed, tag, index)`.
pub fn child_seed(seed: u64, tag: u64, index: u64) -> u64 {
    splitmix64(splitmix64(seed ^ splitmix64(tag)) ^ index.wrapping_mul(0xd6e8_feb8_6659_fd93))
}

/// Independent generator for work item `index` under `(seed, tag)`.
pub fn stream(seed: u64, tag: u64, index: u64) -> StreamRng {
    let mut rng = ChaCha8Rng::seed_from_u64(child_seed(seed, tag, 0));
    rng.set_stream(index);
    rng
}
