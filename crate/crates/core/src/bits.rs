//! Bit-vector conventions shared by the tree code and the index map.
//!
//! A bit-vector is a `[u8]` of zeros and ones read most-significant-bit
//! first, so `[1, 0]` is the integer 2.

/// Integer value of an MSB-first bit-vector.
pub fn to_value(bits: &[u8]) -> u64 {
    debug_assert!(bits.len() <= 64);
    bits.iter().fold(0u64, |acc, &b| (acc << 1) | u64::from(b & 1))
}

/// MSB-first bit-vector of `len` bits holding `value`.
pub fn from_value(value: u64, len: usize) -> Vec<u8> {
    (0..len)
        .map(|i| ((value >> (len - 1 - i)) & 1) as u8)
        .collect()
}

/// Hex string of a bit-vector, left-padded with zero bits to a multiple of four.
pub fn to_hex(bits: &[u8]) -> String {
    let pad = (4 - bits.len() % 4) % 4;
    let padded: Vec<u8> = std::iter::repeat_n(0u8, pad).chain(bits.iter().copied()).collect();
    padded
        .chunks(4)
        .map(|nib| char::from_digit(to_value(nib) as u32, 16).unwrap())
        .collect()
}

/// Parses a hex string into `len` bits. Returns `None` on bad digits or overflow.
pub fn from_hex(hex: &str, len: usize) -> Option<Vec<u8>> {
    let hex = hex.trim().trim_start_matches("0x");
    let mut bits = Vec::with_capacity(hex.len() * 4);
    for c in hex.chars() {
        let d = c.to_digit(16)?;
        bits.extend(from_value(u64::from(d), 4));
    }
    if bits.len() < len {
        let mut out = vec![0u8; len - bits.len()];
        out.extend(bits);
        return Some(out);
    }
    let extra = bits.len() - len;
    if bits[..extra].iter().any(|&b| b != 0) {
        return None;
    }
    Some(bits[extra..].to_vec())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn msb_first() {
        assert_eq!(to_value(&[1, 0]), 2);
        assert_eq!(to_value(&[0, 1]), 1);
        assert_eq!(from_value(2, 2), vec![1, 0]);
        assert_eq!(from_value(5, 4), vec![0, 1, 0, 1]);
    }

    #[test]
    fn hex_round_trip() {
        let bits = vec![1, 0, 1, 1, 0, 0, 1];
        let hex = to_hex(&bits);
        assert_eq!(hex, "59");
        assert_eq!(from_hex(&hex, 7).unwrap(), bits);
        assert!(from_hex("ff", 7).is_none());
        assert!(from_hex("zz", 8).is_none());
    }
}
