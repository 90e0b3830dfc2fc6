//! Seed derivation.
//!
//! Every random stream in the pipeline is a ChaCha8 generator keyed by a
//! seed derived from the master seed plus a stream tag and an index. No
//! generator is shared across components, so adding draws in one place
//! never perturbs another.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Stream tags. Values are arbitrary but frozen: changing one changes every
/// model trained from a given seed.
pub mod stream {
    pub const SPLIT: u64 = 0x5350_4c49;
    pub const RUN: u64 = 0x5255_4e00;
    pub const UNDERSAMPLE: u64 = 0x554e_4453;
    pub const KMEANS: u64 = 0x4b4d_4541;
    pub const SHUFFLE: u64 = 0x5348_5546;
    pub const FOREST: u64 = 0x464f_5245;
    pub const TREE: u64 = 0x5452_4545;
    pub const BOOST: u64 = 0x424f_4f53;
    pub const POISSON: u64 = 0x504f_4953;
    pub const UNIFORM: u64 = 0x554e_4946;
    pub const ALTITUDE: u64 = 0x414c_5449;
    pub const TRIM: u64 = 0x5452_494d;
    pub const POSITIVES: u64 = 0x504f_5349;
    pub const CYCLE: u64 = 0x4359_434c;
    pub const NEGATIVES: u64 = 0x4e45_4741;
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Derives a child seed from `master` for the given stream tag and index.
pub fn derive_seed(master: u64, tag: u64, index: u64) -> u64 {
    splitmix64(splitmix64(master ^ splitmix64(tag)) ^ index)
}

pub fn rng_from_seed(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn derived_rng(master: u64, tag: u64, index: u64) -> ChaCha8Rng {
    rng_from_seed(derive_seed(master, tag, index))
}
