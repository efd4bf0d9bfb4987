//! Deterministic stream derivation.
//!
//! Every random quantity in the crate is drawn from a ChaCha8 stream keyed by
//! `(master_seed, experiment_id)` with the replica index as the 64-bit stream
//! id. ChaCha is counter based, so stream `i` never depends on how many
//! values other streams consumed and results do not depend on the number of
//! worker threads.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type Stream = ChaCha8Rng;

/// Purpose tags folded into the experiment id.
pub mod tag {
    pub const ENV_POSITIVE: u64 = 0x656e_762b;
    pub const ENV_NEGATIVE: u64 = 0x656e_762d;
    pub const WALK: u64 = 0x7761_6c6b;
    pub const BRANCHING: u64 = 0x6270_6930;
    pub const REFERENCE: u64 = 0x7265_6630;
    pub const BOOTSTRAP: u64 = 0x626f_6f74;
    pub const CRITGW: u64 = 0x6372_6974;
    pub const PERPETUITY: u64 = 0x7065_7270;
    pub const ESTIMATES: u64 = 0x6573_7430;
}

#[derive(Clone, Debug)]
pub struct SplitMix64(u64);

impl SplitMix64 {
    pub fn new(seed: u64) -> Self {
        Self(seed)
    }

    #[inline]
    pub fn next_u64(&mut self) -> u64 {
        self.0 = self.0.wrapping_add(0x9E37_79B9_7F4A_7C15);
        mix64(self.0)
    }
}

#[inline]
pub fn mix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Stream `index` of the family keyed by `(master_seed, experiment_id)`.
pub fn split(master_seed: u64, experiment_id: u64, index: u64) -> Stream {
    let mut sm = SplitMix64::new(master_seed ^ mix64(experiment_id.wrapping_add(0x632B_E59B_D9B4_E019)));
    let mut key = [0u8; 32];
    for chunk in key.chunks_exact_mut(8) {
        chunk.copy_from_slice(&sm.next_u64().to_le_bytes());
    }
    let mut rng = ChaCha8Rng::from_seed(key);
    rng.set_stream(index);
    rng
}

/// A 64-bit seed for child computations of replica `index`.
pub fn child_seed(master_seed: u64, experiment_id: u64, index: u64) -> u64 {
    use rand::RngCore;
    split(master_seed, experiment_id, index).next_u64()
}
