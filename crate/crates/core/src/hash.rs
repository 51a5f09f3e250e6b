//! Stable 64-bit hashing used for sampling decisions, sketch registers and
//! subseed derivation.
//!
//! These functions are part of the replay contract: a redo log written by one
//! build must reproduce byte-identical summaries on another, so the mixing
//! constants must never change.

const GOLDEN: u64 = 0x9e37_79b9_7f4a_7c15;

/// SplitMix64 finalizer. Bijective on `u64`.
#[inline]
pub fn mix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Combines two words into one well-mixed word; not symmetric.
#[inline]
pub fn combine(a: u64, b: u64) -> u64 {
    mix64(a.wrapping_mul(GOLDEN) ^ mix64(b.wrapping_add(GOLDEN)))
}

/// Seeded hash of a physical row id.
#[inline]
pub fn hash_row(seed: u64, row: u64) -> u64 {
    combine(seed, row)
}

/// Seeded hash of a byte string.
pub fn hash_bytes(seed: u64, bytes: &[u8]) -> u64 {
    let mut h = mix64(seed ^ (bytes.len() as u64).wrapping_mul(GOLDEN));
    let mut chunks = bytes.chunks_exact(8);
    for chunk in &mut chunks {
        let word = u64::from_le_bytes(chunk.try_into().expect("8-byte chunk"));
        h = mix64(h ^ word).wrapping_add(GOLDEN);
    }
    let rest = chunks.remainder();
    if !rest.is_empty() {
        let mut tail = [0u8; 8];
        tail[..rest.len()].copy_from_slice(rest);
        h = mix64(h ^ u64::from_le_bytes(tail) ^ 0xff);
    }
    mix64(h)
}

/// Maps a hash to a uniform value in `[0, 1)`.
#[inline]
pub fn unit_interval(hash: u64) -> f64 {
    (hash >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
}
