//! Unsigned treelet counts.
//!
//! Counts are carried as 256-bit integers everywhere; fixed-width tables
//! narrow them to 128 bits on write and report overflow instead of wrapping.

use num_bigint::BigUint;
use rand::Rng;
use ruint::aliases::{U256, U512};

use crate::error::{Error, Result};

pub type Count = U256;
pub(crate) type WideCount = U512;

#[inline]
pub fn add(a: Count, b: Count) -> Result<Count> {
    a.checked_add(b)
        .ok_or_else(|| Error::Overflow("sum exceeds 256 bits".into()))
}

#[inline]
pub fn mul(a: Count, b: Count) -> Result<Count> {
    a.checked_mul(b)
        .ok_or_else(|| Error::Overflow("product exceeds 256 bits".into()))
}

pub fn from_u64(x: u64) -> Count {
    Count::from(x)
}

pub fn to_biguint(c: &Count) -> BigUint {
    BigUint::from_bytes_le(&c.to_le_bytes::<32>())
}

pub fn from_biguint(b: &BigUint) -> Result<Count> {
    let bytes = b.to_bytes_le();
    Count::try_from_le_slice(&bytes).ok_or_else(|| Error::Overflow("value exceeds 256 bits".into()))
}

/// Lossy conversion for reporting.
pub fn to_f64(c: &Count) -> f64 {
    let limbs = c.as_limbs();
    let mut acc = 0.0f64;
    for &l in limbs.iter().rev() {
        acc = acc * 18446744073709551616.0 + l as f64;
    }
    acc
}

/// `n choose r`, failing if the result does not fit in 256 bits.
pub fn binomial(n: u64, r: u64) -> Result<Count> {
    if r > n {
        return Ok(Count::ZERO);
    }
    let r = r.min(n - r);
    let mut acc = WideCount::from(1u64);
    for i in 0..r {
        acc = acc * WideCount::from(n - i) / WideCount::from(i + 1);
        if acc.bit_len() > 256 {
            return Err(Error::Overflow(format!("C({n},{r}) exceeds 256 bits")));
        }
    }
    Ok(Count::from(acc))
}

/// Uniform integer in `[0, bound)`. `bound` must be positive.
pub fn random_below<R: Rng + ?Sized>(rng: &mut R, bound: &Count) -> Count {
    debug_assert!(*bound > Count::ZERO);
    let bits = bound.bit_len();
    if bits <= 64 {
        let b = bound.as_limbs()[0];
        return Count::from(rng.gen_range(0..b));
    }
    let top = (bits - 1) / 64;
    let top_mask = if bits.is_multiple_of(64) {
        u64::MAX
    } else {
        (1u64 << (bits % 64)) - 1
    };
    loop {
        let mut limbs = [0u64; 4];
        for (i, l) in limbs.iter_mut().enumerate().take(top + 1) {
            *l = rng.gen();
            if i == top {
                *l &= top_mask;
            }
        }
        let x = Count::from_limbs(limbs);
        if x < *bound {
            return x;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn binomials() {
        assert_eq!(binomial(5, 2).unwrap(), Count::from(10u64));
        assert_eq!(binomial(4, 2).unwrap(), Count::from(6u64));
        assert_eq!(binomial(8, 2).unwrap(), Count::from(28u64));
        assert_eq!(binomial(3, 5).unwrap(), Count::ZERO);
        assert_eq!(binomial(60, 30).unwrap(), Count::from(118264581564861424u64));
        assert!(binomial(100_000, 200).is_err());
    }

    #[test]
    fn overflow_is_detected() {
        let big = Count::MAX;
        assert!(add(big, Count::from(1u64)).is_err());
        assert!(mul(big, Count::from(2u64)).is_err());
    }

    #[test]
    fn random_below_stays_in_range() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let bound = Count::from(1u64) << 200;
        let bound = bound + Count::from(12345u64);
        for _ in 0..1000 {
            assert!(random_below(&mut rng, &bound) < bound);
        }
        let small = Count::from(7u64);
        let mut seen = [0u32; 7];
        for _ in 0..7000 {
            seen[random_below(&mut rng, &small).to::<u64>() as usize] += 1;
        }
        assert!(seen.iter().all(|&c| c > 800));
    }

    #[test]
    fn biguint_round_trip() {
        let x = (Count::from(1u64) << 255) + Count::from(99u64);
        assert_eq!(from_biguint(&to_biguint(&x)).unwrap(), x);
        assert!((to_f64(&Count::from(1u64 << 40)) - (1u64 << 40) as f64).abs() < 1e-6);
    }
}
