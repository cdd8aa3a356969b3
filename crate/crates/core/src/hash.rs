/// 64-bit FNV-1a. Stable across platforms and releases, unlike `std`'s
/// default hasher; used for coordination ids and shard placement.
pub fn fnv1a64(bytes: &[u8]) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for b in bytes {
        h ^= u64::from(*b);
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    h
}
