//! Deterministic substream seed derivation.
//!
//! Every randomized phase derives its own seed from the master seed and a
//! list of integer tags (phase, stage, replicate). Replicates therefore get
//! independent, pre-derived streams and results do not depend on how work is
//! scheduled across threads.

/// Phase tags for substream derivation. Values are arbitrary but fixed.
pub mod phase {
    pub const SIMULATE: u64 = 0x01;
    pub const NULL: u64 = 0x02;
    pub const TRACES: u64 = 0x03;
    pub const ROUND: u64 = 0x04;
    pub const DETECT: u64 = 0x05;
}

pub(crate) fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9e37_79b9_7f4a_7c15);
    x = (x ^ (x >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    x ^ (x >> 31)
}

/// Derive a substream seed from a master seed and a tag path.
pub fn derive_seed(master: u64, tags: &[u64]) -> u64 {
    let mut state = splitmix64(master);
    for &tag in tags {
        state = splitmix64(state ^ splitmix64(tag.wrapping_add(0xa5a5_a5a5_a5a5_a5a5)));
    }
    state
}
