use std::collections::HashMap;

use super::{enumerate_shapes, TreeletShape};

/// Balanced rooting of a non-star shape: `rep` is rooted so that removing the
/// root child `right` leaves `left`, both of at most `k-2` nodes.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct BalancedSplit {
    pub rep: TreeletShape,
    pub left: TreeletShape,
    pub right: TreeletShape,
    /// Root children of `rep` isomorphic to `right`.
    pub beta: u32,
}

/// The unrooted `k`-node tree shapes and how rooted shapes map onto them.
#[derive(Clone, Debug)]
pub struct ShapeCatalog {
    k: usize,
    free: Vec<TreeletShape>,
    rooted_to_free: HashMap<TreeletShape, usize>,
    rootings: Vec<Vec<TreeletShape>>,
    balanced: Vec<Option<BalancedSplit>>,
    balanced_roots: Vec<u32>,
    by_halves: HashMap<(TreeletShape, TreeletShape), usize>,
    star: usize,
}

impl ShapeCatalog {
    pub fn new(k: usize) -> ShapeCatalog {
        let rooted: Vec<TreeletShape> = enumerate_shapes(k).into_iter().filter(|s| s.size() == k).collect();
        let mut free: Vec<TreeletShape> = rooted.iter().map(|s| s.unrooted()).collect();
        free.sort_unstable();
        free.dedup();
        let index: HashMap<TreeletShape, usize> = free.iter().enumerate().map(|(i, s)| (*s, i)).collect();
        let mut rooted_to_free = HashMap::new();
        let mut rootings = vec![Vec::new(); free.len()];
        for s in &rooted {
            let j = index[&s.unrooted()];
            rooted_to_free.insert(*s, j);
            rootings[j].push(*s);
        }
        let mut balanced = Vec::with_capacity(free.len());
        let mut balanced_roots = Vec::with_capacity(free.len());
        let mut by_halves = HashMap::new();
        let mut star = usize::MAX;
        for (j, s) in free.iter().enumerate() {
            if s.is_star() {
                star = j;
                balanced.push(None);
                balanced_roots.push(0);
                continue;
            }
            let split = s.balanced_decompose().expect("non-star shapes split");
            let adj = s.to_tree();
            let roots = (0..k).filter(|&r| TreeletShape::from_tree(&adj, r) == split.rep).count();
            by_halves.insert((split.left, split.right), j);
            balanced.push(Some(split));
            balanced_roots.push(roots as u32);
        }
        ShapeCatalog {
            k,
            free,
            rooted_to_free,
            rootings,
            balanced,
            balanced_roots,
            by_halves,
            star,
        }
    }

    pub fn k(&self) -> usize {
        self.k
    }

    /// Unrooted shapes in canonical order; the position is the shape id.
    pub fn free_shapes(&self) -> &[TreeletShape] {
        &self.free
    }

    pub fn len(&self) -> usize {
        self.free.len()
    }

    pub fn is_empty(&self) -> bool {
        self.free.is_empty()
    }

    pub fn star(&self) -> usize {
        self.star
    }

    /// Shape id of a rooted `k`-node shape.
    pub fn free_id(&self, rooted: &TreeletShape) -> Option<usize> {
        self.rooted_to_free.get(rooted).copied()
    }

    pub fn rootings(&self, j: usize) -> &[TreeletShape] {
        &self.rootings[j]
    }

    pub fn balanced(&self, j: usize) -> Option<&BalancedSplit> {
        self.balanced[j].as_ref()
    }

    /// Nodes of shape `j` at which rooting yields the balanced representative.
    pub fn balanced_roots(&self, j: usize) -> u32 {
        self.balanced_roots[j]
    }

    /// The non-star shape assembled from `left` at the root and `right` under it, if
    /// that pair is the shape's balanced split.
    pub fn balanced_for_halves(&self, left: &TreeletShape, right: &TreeletShape) -> Option<usize> {
        self.by_halves.get(&(*left, *right)).copied()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn free_tree_counts() {
        // unrooted trees on n nodes
        let expected = [(3, 1), (4, 2), (5, 3), (6, 6), (7, 11), (8, 23), (9, 47), (10, 106)];
        for (k, n) in expected {
            assert_eq!(ShapeCatalog::new(k).len(), n, "k={k}");
        }
    }

    #[test]
    fn k3_has_only_the_star() {
        let cat = ShapeCatalog::new(3);
        assert_eq!(cat.len(), 1);
        assert_eq!(cat.star(), 0);
        assert!(cat.balanced(0).is_none());
    }

    #[test]
    fn path4_balanced_root_multiplicity() {
        let cat = ShapeCatalog::new(4);
        let path = (0..cat.len()).find(|&j| j != cat.star()).unwrap();
        // both middle nodes give the same rooted representative
        assert_eq!(cat.balanced_roots(path), 2);
        let split = cat.balanced(path).unwrap();
        assert_eq!(cat.balanced_for_halves(&split.left, &split.right), Some(path));
    }

    #[test]
    fn rootings_partition_rooted_shapes() {
        let cat = ShapeCatalog::new(6);
        let total: usize = (0..cat.len()).map(|j| cat.rootings(j).len()).sum();
        assert_eq!(total, 20);
    }
}
