//! Stable hashing for seed derivation and keyed shuffles.
//!
//! `std`'s `DefaultHasher` is not guaranteed stable across releases, so split
//! assignment and per-cell seeds go through FNV-1a followed by a splitmix64 finalizer.

const FNV_OFFSET: u64 = 0xcbf2_9ce4_8422_2325;
const FNV_PRIME: u64 = 0x0000_0100_0000_01b3;

pub(crate) fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Hash of `seed` and a sequence of byte strings; each part is length-prefixed.
pub(crate) fn keyed_hash(seed: u64, parts: &[&[u8]]) -> u64 {
    let mut h = FNV_OFFSET ^ splitmix64(seed);
    for part in parts {
        for b in (part.len() as u64).to_le_bytes().iter().chain(part.iter()) {
            h ^= u64::from(*b);
            h = h.wrapping_mul(FNV_PRIME);
        }
    }
    splitmix64(h)
}

pub(crate) fn derive_seed(seed: u64, labels: &[&str]) -> u64 {
    let parts: Vec<&[u8]> = labels.iter().map(|s| s.as_bytes()).collect();
    keyed_hash(seed, &parts)
}
