use std::collections::BTreeSet;

use super::{ColoredTreelet, TreeletShape};
use crate::graph::MAX_K;

/// All rooted shapes on `1..=max_size` nodes, closed under merge from the
/// singleton, sorted by the shape order.
pub fn enumerate_shapes(max_size: usize) -> Vec<TreeletShape> {
    assert!(max_size <= MAX_K, "shapes are limited to {MAX_K} nodes");
    let mut levels: Vec<Vec<TreeletShape>> = vec![Vec::new(), vec![TreeletShape::SINGLETON]];
    for h in 2..=max_size {
        let mut out = BTreeSet::new();
        for h2 in 1..h {
            for t1 in &levels[h - h2] {
                let first = t1.first_child();
                for t2 in &levels[h2] {
                    if first.is_none_or(|f| *t2 >= f) {
                        out.insert(t1.prepend_unchecked(t2));
                    }
                }
            }
        }
        levels.push(out.into_iter().collect());
    }
    levels.into_iter().flatten().collect()
}

/// Number of rooted shapes of each size `1..=max_size`.
pub fn shape_counts(max_size: usize) -> Vec<usize> {
    let shapes = enumerate_shapes(max_size);
    (1..=max_size).map(|h| shapes.iter().filter(|s| s.size() == h).count()).collect()
}

/// All colorful rooted treelets over colors `0..k`, built by merge closure
/// from the `k` singletons and sorted by the treelet order.
pub fn enumerate_colored(k: usize) -> Vec<ColoredTreelet> {
    assert!(k <= MAX_K);
    let mut levels: Vec<Vec<ColoredTreelet>> = vec![Vec::new(), (0..k as u8).map(ColoredTreelet::singleton).collect()];
    for h in 2..=k {
        let mut out = BTreeSet::new();
        for h2 in 1..h {
            for t1 in &levels[h - h2] {
                for t2 in &levels[h2] {
                    if let Ok(Some(t)) = t1.merge(t2) {
                        out.insert(t);
                    }
                }
            }
        }
        levels.push(out.into_iter().collect());
    }
    levels.into_iter().flatten().collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rooted_shape_counts() {
        assert_eq!(shape_counts(8), vec![1, 1, 2, 4, 9, 20, 48, 115]);
    }

    #[test]
    fn colored_counts() {
        assert_eq!(enumerate_colored(8).len(), 1991);
        // two singletons and one 2-node path
        assert_eq!(enumerate_colored(2).len(), 3);
        let c3 = enumerate_colored(3);
        assert_eq!(c3.len(), 3 + 3 + 2);
        assert!(c3.windows(2).all(|w| w[0] < w[1]));
    }

    #[test]
    fn shapes_are_sorted_and_unique() {
        let all = enumerate_shapes(9);
        assert!(all.windows(2).all(|w| w[0] < w[1]));
        assert_eq!(all.iter().filter(|s| s.size() == 9).count(), 286);
    }
}
