//! Vose's alias method over exact integer weights.

use rand::Rng;

use crate::count::{self, Count, WideCount};
use crate::error::{Error, Result};

#[derive(Clone, Debug)]
pub struct AliasTable {
    total: Count,
    /// Slot `i` keeps itself when a uniform draw in `[0, total)` falls below `threshold[i]`.
    threshold: Vec<Count>,
    alias: Vec<u32>,
}

impl AliasTable {
    pub fn new(weights: &[Count]) -> Result<AliasTable> {
        let n = weights.len();
        if n == 0 || n > u32::MAX as usize {
            return Err(Error::invalid("alias table needs 1..2^32 weights"));
        }
        let mut total = Count::ZERO;
        for w in weights {
            total = count::add(total, *w)?;
        }
        if total.is_zero() {
            return Err(Error::NoneExist("all weights are zero".into()));
        }
        // scale by n so the mean slot weight is exactly `total`
        let t = WideCount::from(total);
        let nn = WideCount::from(n as u64);
        let mut scaled: Vec<WideCount> = weights.iter().map(|w| WideCount::from(*w) * nn).collect();
        let mut threshold = vec![Count::ZERO; n];
        let mut alias: Vec<u32> = (0..n as u32).collect();
        let mut small: Vec<usize> = Vec::new();
        let mut large: Vec<usize> = Vec::new();
        for (i, s) in scaled.iter().enumerate() {
            if *s < t {
                small.push(i);
            } else {
                large.push(i);
            }
        }
        while let (Some(&s), Some(&l)) = (small.last(), large.last()) {
            small.pop();
            threshold[s] = Count::from(scaled[s]);
            alias[s] = l as u32;
            let deficit = t - scaled[s];
            scaled[l] -= deficit;
            if scaled[l] < t {
                large.pop();
                small.push(l);
            }
        }
        for i in large.into_iter().chain(small) {
            threshold[i] = total;
        }
        Ok(AliasTable { total, threshold, alias })
    }

    pub fn len(&self) -> usize {
        self.alias.len()
    }

    pub fn is_empty(&self) -> bool {
        self.alias.is_empty()
    }

    pub fn total(&self) -> Count {
        self.total
    }

    #[inline]
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> usize {
        let i = rng.gen_range(0..self.alias.len());
        let x = count::random_below(rng, &self.total);
        if x < self.threshold[i] {
            i
        } else {
            self.alias[i] as usize
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn weights(w: &[u64]) -> Vec<Count> {
        w.iter().map(|&x| Count::from(x)).collect()
    }

    fn within_5_sigma(hits: usize, n: usize, p: f64) -> bool {
        let sd = (n as f64 * p * (1.0 - p)).sqrt();
        (hits as f64 - n as f64 * p).abs() <= 5.0 * sd.max(1e-9)
    }

    #[test]
    fn proportional_draws() {
        let t = AliasTable::new(&weights(&[1, 2, 3])).unwrap();
        let mut rng = crate::rng::stream(1, 2);
        let n = 600_000;
        let mut hits = [0usize; 3];
        for _ in 0..n {
            hits[t.sample(&mut rng)] += 1;
        }
        for (i, p) in [1.0 / 6.0, 1.0 / 3.0, 0.5].into_iter().enumerate() {
            assert!(within_5_sigma(hits[i], n, p), "{hits:?}");
        }
    }

    #[test]
    fn degenerate_inputs() {
        let t = AliasTable::new(&weights(&[5])).unwrap();
        let mut rng = crate::rng::stream(1, 3);
        assert!((0..100).all(|_| t.sample(&mut rng) == 0));
        let coin = AliasTable::new(&weights(&[1, 1])).unwrap();
        let heads = (0..100_000).filter(|_| coin.sample(&mut rng) == 0).count();
        assert!(within_5_sigma(heads, 100_000, 0.5));
        assert!(AliasTable::new(&weights(&[0, 0])).is_err());
        let z = AliasTable::new(&weights(&[0, 3, 0])).unwrap();
        assert!((0..1000).all(|_| z.sample(&mut rng) == 1));
    }

    #[test]
    fn exact_slot_masses() {
        // the mass assigned to each index over all (slot, threshold) cells equals n * w_i
        let w = weights(&[7, 1, 0, 13, 2, 2]);
        let t = AliasTable::new(&w).unwrap();
        let n = w.len() as u64;
        let mut mass = vec![Count::ZERO; w.len()];
        for i in 0..t.len() {
            mass[i] += t.threshold[i];
            mass[t.alias[i] as usize] += t.total - t.threshold[i];
        }
        for (m, wi) in mass.iter().zip(&w) {
            assert_eq!(*m, *wi * Count::from(n));
        }
        let huge = vec![Count::MAX >> 2, Count::MAX >> 3, Count::from(1u64)];
        assert!(AliasTable::new(&huge).is_ok());
    }
}
