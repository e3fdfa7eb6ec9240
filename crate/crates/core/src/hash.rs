//! Small stable hashing helpers.
//!
//! The standard library hasher is not guaranteed stable across releases, and
//! several outputs (isomorphism classes, fingerprints, splits, synthetic data)
//! must be reproducible bit for bit.

const FNV_OFFSET: u64 = 0xcbf2_9ce4_8422_2325;
const FNV_PRIME: u64 = 0x0000_0100_0000_01b3;

/// SplitMix64 finalizer.
#[inline]
pub fn mix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Order-dependent combination of two hashes.
#[inline]
pub fn combine(seed: u64, value: u64) -> u64 {
    mix64(seed ^ value.wrapping_add(0x9e37_79b9_7f4a_7c15).wrapping_add(seed << 6).wrapping_add(seed >> 2))
}

/// FNV-1a over bytes, finalized with SplitMix64.
pub fn hash_bytes(bytes: &[u8]) -> u64 {
    let mut h = FNV_OFFSET;
    for &b in bytes {
        h ^= b as u64;
        h = h.wrapping_mul(FNV_PRIME);
    }
    mix64(h)
}

/// Hash of a sorted sequence, independent of how it was produced.
pub fn hash_seq<I: IntoIterator<Item = u64>>(seed: u64, items: I) -> u64 {
    items.into_iter().fold(seed, combine)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn stable_values() {
        assert_eq!(hash_bytes(b""), mix64(FNV_OFFSET));
        assert_ne!(hash_bytes(b"a"), hash_bytes(b"b"));
        assert_ne!(combine(1, 2), combine(2, 1));
    }
}
