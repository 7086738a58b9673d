//! Stable 64-bit hashing. Index files must hash identically across runs and
//! toolchains, so nothing here may depend on `std::hash` internals.

const FNV_OFFSET: u64 = 0xcbf2_9ce4_8422_2325;
const FNV_PRIME: u64 = 0x0000_0100_0000_01b3;

/// splitmix64 finalizer.
pub fn mix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Seeded hash of a byte string: FNV-1a over the bytes, finalized with
/// splitmix64 keyed by `seed`.
pub fn hash_bytes(bytes: &[u8], seed: u64) -> u64 {
    let mut h = FNV_OFFSET ^ mix64(seed);
    for &b in bytes {
        h ^= u64::from(b);
        h = h.wrapping_mul(FNV_PRIME);
    }
    mix64(h ^ (bytes.len() as u64).rotate_left(32))
}

/// Derive a sub-seed for a named purpose from the global seed.
pub fn derive_seed(seed: u64, purpose: &str) -> u64 {
    hash_bytes(purpose.as_bytes(), seed)
}
