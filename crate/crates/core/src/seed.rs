//! Counter-keyed seed derivation. A child seed depends only on the master
//! seed and its key path, so any trial can be replayed alone and parallel
//! workers never share a generator.

/// SplitMix64 finalizer.
fn mix(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

const GOLDEN: u64 = 0x9e37_79b9_7f4a_7c15;

/// Seed for the stream identified by `path` under `master`.
pub fn derive(master: u64, path: &[u64]) -> u64 {
    path.iter().fold(mix(master.wrapping_add(GOLDEN)), |acc, &k| {
        mix(acc ^ mix(k.wrapping_add(GOLDEN).wrapping_mul(GOLDEN)))
    })
}

/// Stream tags used by the harness.
pub mod stream {
    pub const RADAR_FRAME: u64 = 1;
    pub const RADAR_NOISE: u64 = 2;
    pub const BER_TRIAL: u64 = 3;
    pub const FRAME: u64 = 0;
    pub const CHANNEL: u64 = 1;
    pub const NOISE: u64 = 2;
}
