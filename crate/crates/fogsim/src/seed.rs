//! Deterministic seed derivation.
//!
//! Every stochastic stage derives its own seed from the master seed and a
//! textual label, so stages can be re-run in isolation and adding a stage
//! never shifts another stage's random stream. The rule is:
//!
//! ```text
//! sub_seed(master, label) = splitmix64(master XOR fnv1a64(label))
//! ```
//!
//! Both FNV-1a and SplitMix64 are fixed-width integer recurrences, so the
//! derivation is identical on every platform.

/// FNV-1a 64-bit hash of a label.
pub fn fnv1a64(label: &str) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for b in label.as_bytes() {
        h ^= u64::from(*b);
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    h
}

/// One SplitMix64 step: decorrelates structurally similar inputs.
pub fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9e37_79b9_7f4a_7c15);
    x = (x ^ (x >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    x ^ (x >> 31)
}

/// Sub-seed for a named stage.
pub fn derive_seed(master: u64, label: &str) -> u64 {
    splitmix64(master ^ fnv1a64(label))
}

/// Per-element seed within a stage, keyed by element index. Used to make
/// per-request randomness independent of processing order.
pub fn indexed_seed(stage_seed: u64, index: u64) -> u64 {
    splitmix64(stage_seed ^ splitmix64(index))
}
