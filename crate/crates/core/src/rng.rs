//! Seed streams.
//!
//! Every parallel unit of work (a batch element, an evaluation episode, a
//! claim) gets its own generator derived from a root seed and a path of
//! integer keys. The derivation is a chain of SplitMix64 finalizers, so the
//! stream for `(root, [a, b])` does not depend on how many other streams were
//! created or on which thread asks for it.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type NavRng = ChaCha8Rng;

#[inline]
pub fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Derives a child seed from `root` and a key path.
pub fn derive_seed(root: u64, keys: &[u64]) -> u64 {
    keys.iter()
        .fold(splitmix64(root), |acc, &k| splitmix64(acc ^ splitmix64(k)))
}

pub fn rng_from(root: u64, keys: &[u64]) -> NavRng {
    NavRng::seed_from_u64(derive_seed(root, keys))
}

/// Stream tags, so that e.g. episode generation and agent choices made for the
/// same episode index never share a generator.
pub mod stream {
    pub const TRAIN_BATCH: u64 = 1;
    pub const EVAL_EPISODE: u64 = 2;
    pub const EVAL_AGENT: u64 = 3;
    pub const INIT: u64 = 4;
    pub const RL_EPISODE: u64 = 5;
    pub const CLAIMS: u64 = 6;
    pub const FINETUNE: u64 = 7;
    pub const SYNTH: u64 = 8;
    pub const PROBE: u64 = 9;
}
