//! Variable-length count records: a 16-bit little-endian header holding an
//! 11-bit treelet index and the byte length `l` of the count (stored as
//! `l - 1` in the top five bits), followed by the `l` little-endian count bytes.

use crate::count::Count;
use crate::error::{Error, Result};

pub const MAX_KEY: u16 = (1 << 11) - 1;

/// Minimal number of bytes holding `count`.
#[inline]
pub fn byte_len(count: &Count) -> usize {
    count.bit_len().div_ceil(8).max(1)
}

pub fn encode(key: u16, count: &Count, out: &mut Vec<u8>) -> Result<()> {
    if key > MAX_KEY {
        return Err(Error::invalid(format!("treelet index {key} does not fit in 11 bits")));
    }
    if count.is_zero() {
        return Err(Error::invalid("zero counts are never stored"));
    }
    let len = byte_len(count);
    let header = key | (((len - 1) as u16) << 11);
    out.extend_from_slice(&header.to_le_bytes());
    out.extend_from_slice(&count.as_le_slice()[..len]);
    Ok(())
}

/// Returns `(key, count, bytes consumed)`.
pub fn decode(bytes: &[u8]) -> Result<(u16, Count, usize)> {
    if bytes.len() < 2 {
        return Err(Error::invalid("truncated count header"));
    }
    let header = u16::from_le_bytes([bytes[0], bytes[1]]);
    let len = (header >> 11) as usize + 1;
    let body = bytes
        .get(2..2 + len)
        .ok_or_else(|| Error::invalid("truncated count body"))?;
    let count = Count::try_from_le_slice(body).expect("at most 32 bytes");
    Ok((header & MAX_KEY, count, 2 + len))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn round_trip(key: u16, count: Count) -> usize {
        let mut buf = Vec::new();
        encode(key, &count, &mut buf).unwrap();
        let (k2, c2, used) = decode(&buf).unwrap();
        assert_eq!((k2, c2, used), (key, count, buf.len()));
        buf.len() - 2
    }

    #[test]
    fn lengths_at_boundaries() {
        assert_eq!(round_trip(7, Count::from(200u64)), 1);
        assert_eq!(round_trip(7, Count::from(65535u64)), 2);
        assert_eq!(round_trip(7, Count::from(1u128 << 64)), 9);
        assert_eq!(round_trip(MAX_KEY, Count::MAX), 32);
        assert_eq!(round_trip(0, Count::from(1u64)), 1);
    }

    #[test]
    fn rejects_bad_input() {
        let mut buf = Vec::new();
        assert!(encode(1, &Count::ZERO, &mut buf).is_err());
        assert!(encode(2048, &Count::from(1u64), &mut buf).is_err());
        assert!(decode(&[0x01]).is_err());
        assert!(decode(&[0x01, 0x08, 0xff]).is_err());
    }
}
