//! Small shared helpers: canonical number formatting and hashing.

/// Formats a real with 9 significant digits in scientific notation; the
/// canonical representation in every serialized file. Negative zero is
/// normalized.
pub fn fmt_g9(x: f64) -> String {
    let x = if x == 0.0 { 0.0 } else { x };
    format!("{x:.8e}")
}

/// FNV-1a 64-bit digest.
pub fn fnv1a64(bytes: &[u8]) -> u64 {
    let mut hash: u64 = 0xcbf2_9ce4_8422_2325;
    for &b in bytes {
        hash ^= b as u64;
        hash = hash.wrapping_mul(0x0000_0100_0000_01b3);
    }
    hash
}
