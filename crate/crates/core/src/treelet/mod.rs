//! Rooted treelets and their colored variants.
//!
//! A rooted shape on `h` nodes is encoded by its Euler tour: a DFS from the
//! root emits `1` when descending an edge and `0` when climbing back, giving
//! `2(h-1)` bits. The first tour step is the most significant bit of the
//! right-aligned word. Children of every node are visited in non-increasing
//! `(size, bits)` order, which makes the encoding canonical.

use std::cmp::Ordering;
use std::fmt;

use crate::error::{Error, Result};
use crate::graph::MAX_K;

mod enumerate;
mod free;
pub mod ite;

pub use enumerate::{enumerate_colored, enumerate_shapes, shape_counts};
pub use free::{BalancedSplit, ShapeCatalog};
pub use ite::TreeletIndexTables;

/// Uncolored rooted tree shape.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct TreeletShape {
    size: u8,
    bits: u32,
}

impl TreeletShape {
    pub const SINGLETON: TreeletShape = TreeletShape { size: 1, bits: 0 };

    /// Validates that `bits` is a balanced tour of `size` nodes in canonical child order.
    pub fn new(size: usize, bits: u32) -> Result<TreeletShape> {
        if size == 0 || size > MAX_K {
            return Err(Error::SizeOverflow(size));
        }
        let shape = TreeletShape {
            size: size as u8,
            bits,
        };
        let len = shape.tour_len();
        if len < 32 && bits >> len != 0 {
            return Err(Error::invalid(format!("tour {bits:#b} longer than {len} bits")));
        }
        let mut depth = 0i32;
        for i in 0..len {
            depth += if shape.bit(i) { 1 } else { -1 };
            if depth < 0 {
                return Err(Error::invalid("unbalanced tour"));
            }
        }
        if depth != 0 {
            return Err(Error::invalid("unbalanced tour"));
        }
        let canon = TreeletShape::from_tree(&shape.to_tree(), 0);
        if canon != shape {
            return Err(Error::invalid("tour is not in canonical child order"));
        }
        Ok(shape)
    }

    #[inline]
    pub(crate) const fn from_raw(size: usize, bits: u32) -> TreeletShape {
        TreeletShape {
            size: size as u8,
            bits,
        }
    }

    #[inline]
    pub fn size(&self) -> usize {
        self.size as usize
    }

    #[inline]
    pub fn bits(&self) -> u32 {
        self.bits
    }

    #[inline]
    pub fn tour_len(&self) -> usize {
        2 * (self.size as usize - 1)
    }

    #[inline]
    fn bit(&self, i: usize) -> bool {
        (self.bits >> (self.tour_len() - 1 - i)) & 1 == 1
    }

    /// Splits off the first child subtree: `(child, rest)` where `rest` is the
    /// tree without that subtree. `None` for the singleton.
    pub fn split_first(&self) -> Option<(TreeletShape, TreeletShape)> {
        if self.size == 1 {
            return None;
        }
        let len = self.tour_len();
        let mut depth = 0i32;
        let mut close = 0;
        for i in 0..len {
            depth += if self.bit(i) { 1 } else { -1 };
            if depth == 0 {
                close = i;
                break;
            }
        }
        // positions 1..close-1 hold the child's tour
        let child_len = close - 1;
        let child_bits = (self.bits >> (len - close)) & mask(child_len);
        let rest_len = len - close - 1;
        let rest_bits = self.bits & mask(rest_len);
        Some((
            TreeletShape::from_raw(child_len / 2 + 1, child_bits),
            TreeletShape::from_raw(rest_len / 2 + 1, rest_bits),
        ))
    }

    pub fn first_child(&self) -> Option<TreeletShape> {
        self.split_first().map(|(c, _)| c)
    }

    /// Root children in visiting order (non-increasing).
    pub fn children(&self) -> Vec<TreeletShape> {
        let mut out = Vec::new();
        let mut cur = *self;
        while let Some((child, rest)) = cur.split_first() {
            out.push(child);
            cur = rest;
        }
        out
    }

    /// Builds the shape whose root has the given child subtrees.
    pub fn from_children(mut children: Vec<TreeletShape>) -> TreeletShape {
        children.sort_unstable_by(|a, b| b.cmp(a));
        let mut size = 1usize;
        let mut bits = 0u64;
        for c in &children {
            bits = (bits << (c.tour_len() + 2)) | (1u64 << (c.tour_len() + 1)) | ((c.bits as u64) << 1);
            size += c.size();
        }
        TreeletShape::from_raw(size, bits as u32)
    }

    /// Prepends `child` as the new first root child. `Ok(None)` when `child`
    /// is smaller than the current first child (the order constraint); an
    /// error when the result would exceed the maximum size.
    pub fn merge(&self, child: &TreeletShape) -> Result<Option<TreeletShape>> {
        let size = self.size() + child.size();
        if size > MAX_K {
            return Err(Error::SizeOverflow(size));
        }
        if let Some(first) = self.first_child() {
            if *child < first {
                return Ok(None);
            }
        }
        Ok(Some(self.prepend_unchecked(child)))
    }

    #[inline]
    pub(crate) fn prepend_unchecked(&self, child: &TreeletShape) -> TreeletShape {
        let prefix = (1u32 << (child.tour_len() + 1)) | (child.bits << 1);
        TreeletShape::from_raw(
            self.size() + child.size(),
            (prefix << self.tour_len()) | self.bits,
        )
    }

    /// Attaches `child` under the root wherever canonical order puts it.
    pub fn attach(&self, child: &TreeletShape) -> TreeletShape {
        let mut kids = self.children();
        kids.push(*child);
        TreeletShape::from_children(kids)
    }

    /// Number of root children whose subtree equals `child`.
    pub fn multiplicity_of_child(&self, child: &TreeletShape) -> usize {
        self.children().iter().filter(|c| *c == child).count()
    }

    /// Adjacency lists of the tree; node 0 is the root, nodes numbered in DFS order.
    pub fn to_tree(&self) -> Vec<Vec<usize>> {
        let mut adj = vec![Vec::new(); self.size()];
        let mut stack = vec![0usize];
        let mut next = 1;
        for i in 0..self.tour_len() {
            if self.bit(i) {
                let parent = *stack.last().unwrap();
                adj[parent].push(next);
                adj[next].push(parent);
                stack.push(next);
                next += 1;
            } else {
                stack.pop();
            }
        }
        adj
    }

    /// Canonical encoding of the tree `adj` rooted at `root`.
    pub fn from_tree(adj: &[Vec<usize>], root: usize) -> TreeletShape {
        fn rec(adj: &[Vec<usize>], v: usize, parent: usize) -> TreeletShape {
            let kids = adj[v].iter().filter(|&&u| u != parent).map(|&u| rec(adj, u, v)).collect();
            TreeletShape::from_children(kids)
        }
        rec(adj, root, usize::MAX)
    }

    /// Canonical form of the unrooted tree: the smallest encoding over all rootings.
    pub fn unrooted(&self) -> TreeletShape {
        let adj = self.to_tree();
        (0..adj.len()).map(|r| TreeletShape::from_tree(&adj, r)).min().unwrap()
    }

    /// True when some node is adjacent to all others (the `h`-star; every tree on ≤ 3 nodes).
    pub fn is_star(&self) -> bool {
        let adj = self.to_tree();
        adj.iter().any(|a| a.len() + 1 == adj.len())
    }

    /// Balanced decomposition of a non-star shape: a rooting `rep` and a root
    /// child whose removal leaves two parts of at most `size-2` nodes. Among
    /// all valid (root, child) pairs the one minimizing `(rep, right)` wins.
    pub fn balanced_decompose(&self) -> Result<BalancedSplit> {
        let k = self.size();
        if self.is_star() {
            return Err(Error::invalid("stars have no balanced decomposition"));
        }
        let adj = self.to_tree();
        let mut best: Option<BalancedSplit> = None;
        for r in 0..k {
            for &c in &adj[r] {
                let right = TreeletShape::from_tree_without(&adj, c, r);
                if right.size() < 2 || right.size() > k - 2 {
                    continue;
                }
                let rep = TreeletShape::from_tree(&adj, r);
                let left = rooted_without_child(&adj, r, c);
                let cand = BalancedSplit {
                    rep,
                    left,
                    right,
                    beta: rep.multiplicity_of_child(&right) as u32,
                };
                if best.as_ref().is_none_or(|b| (cand.rep, cand.right) < (b.rep, b.right)) {
                    best = Some(cand);
                }
            }
        }
        best.ok_or_else(|| Error::invalid("no balanced cut found"))
    }

    /// Subtree at `v` hanging away from `parent`.
    fn from_tree_without(adj: &[Vec<usize>], v: usize, parent: usize) -> TreeletShape {
        let kids = adj[v]
            .iter()
            .filter(|&&u| u != parent)
            .map(|&u| TreeletShape::from_tree_without(adj, u, v))
            .collect();
        TreeletShape::from_children(kids)
    }
}

fn rooted_without_child(adj: &[Vec<usize>], root: usize, cut: usize) -> TreeletShape {
    let kids = adj[root]
        .iter()
        .filter(|&&u| u != cut)
        .map(|&u| TreeletShape::from_tree_without(adj, u, root))
        .collect();
    TreeletShape::from_children(kids)
}

#[inline]
fn mask(len: usize) -> u32 {
    if len >= 32 {
        u32::MAX
    } else {
        (1u32 << len) - 1
    }
}

impl fmt::Debug for TreeletShape {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Shape({}, \"{}\")", self.size, self)
    }
}

impl fmt::Display for TreeletShape {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.size == 1 {
            return write!(f, "ε");
        }
        for i in 0..self.tour_len() {
            write!(f, "{}", if self.bit(i) { '1' } else { '0' })?;
        }
        Ok(())
    }
}

/// A rooted shape together with the set of colors its nodes carry.
/// Only colorful treelets exist: `|colors| = size`.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ColoredTreelet {
    shape: TreeletShape,
    colors: u16,
}

impl ColoredTreelet {
    pub fn new(shape: TreeletShape, colors: u16) -> Result<ColoredTreelet> {
        if colors.count_ones() as usize != shape.size() {
            return Err(Error::invalid(format!(
                "colorset {colors:#b} does not match treelet size {}",
                shape.size()
            )));
        }
        Ok(ColoredTreelet { shape, colors })
    }

    pub fn singleton(color: u8) -> ColoredTreelet {
        assert!((color as usize) < MAX_K, "color out of range");
        ColoredTreelet {
            shape: TreeletShape::SINGLETON,
            colors: 1 << color,
        }
    }

    #[inline]
    pub fn shape(&self) -> TreeletShape {
        self.shape
    }

    #[inline]
    pub fn colors(&self) -> u16 {
        self.colors
    }

    #[inline]
    pub fn size(&self) -> usize {
        self.shape.size()
    }

    /// Packed 46-bit key: tour bits above the 16-bit color vector. Within one
    /// size, key order equals treelet order.
    #[inline]
    pub fn key(&self) -> u64 {
        ((self.shape.bits as u64) << 16) | self.colors as u64
    }

    #[inline]
    pub fn from_key(key: u64) -> ColoredTreelet {
        let colors = key as u16;
        ColoredTreelet {
            shape: TreeletShape::from_raw(colors.count_ones() as usize, (key >> 16) as u32),
            colors,
        }
    }

    /// Appends `t2` as the new first child of this treelet's root.
    /// `Ok(None)` is the FAIL answer (color clash or order constraint).
    pub fn merge(&self, t2: &ColoredTreelet) -> Result<Option<ColoredTreelet>> {
        let Some(shape) = self.shape.merge(&t2.shape)? else {
            return Ok(None);
        };
        if self.colors & t2.colors != 0 {
            return Ok(None);
        }
        Ok(Some(ColoredTreelet {
            shape,
            colors: self.colors | t2.colors,
        }))
    }

    /// Canonical decomposition: `t2` is the first (largest) root child, `t1`
    /// the rest. The color split is not recorded by a colored treelet, so
    /// `t2` receives the `|t2|` smallest colors.
    pub fn canonical_decompose(&self) -> Result<(ColoredTreelet, ColoredTreelet)> {
        let (child, rest) = self
            .shape
            .split_first()
            .ok_or_else(|| Error::invalid("a single node has no decomposition"))?;
        let mut low = 0u16;
        let mut c = self.colors;
        for _ in 0..child.size() {
            let bit = c & c.wrapping_neg();
            low |= bit;
            c &= !bit;
        }
        Ok((
            ColoredTreelet {
                shape: rest,
                colors: c,
            },
            ColoredTreelet {
                shape: child,
                colors: low,
            },
        ))
    }

    /// β: root children whose subtree shape equals the canonical `t2` shape.
    pub fn beta(&self) -> u32 {
        match self.shape.first_child() {
            Some(first) => self.shape.multiplicity_of_child(&first) as u32,
            None => 1,
        }
    }
}

impl fmt::Debug for ColoredTreelet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Treelet(\"{}\", {:#b})", self.shape, self.colors)
    }
}

/// Order on colored treelets: size, then tour bits, then colorset.
pub fn compare(a: &ColoredTreelet, b: &ColoredTreelet) -> Ordering {
    a.cmp(b)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn s(size: usize, tour: &str) -> TreeletShape {
        let bits = if tour.is_empty() { 0 } else { u32::from_str_radix(tour, 2).unwrap() };
        TreeletShape::new(size, bits).unwrap()
    }

    #[test]
    fn singleton() {
        let t = ColoredTreelet::singleton(0);
        assert_eq!(t.size(), 1);
        assert_eq!(t.shape().bits(), 0);
        assert_eq!(t.colors(), 0b1);
        assert_eq!(ColoredTreelet::singleton(3).colors(), 0b1000);
        assert_eq!(ColoredTreelet::from_key(t.key()), t);
    }

    #[test]
    fn merge_examples() {
        let a = ColoredTreelet::singleton(0);
        let b = ColoredTreelet::singleton(1);
        let path2 = a.merge(&b).unwrap().unwrap();
        assert_eq!(path2.shape(), s(2, "10"));
        assert_eq!(path2.colors(), 0b11);
        assert_eq!(a.merge(&a).unwrap(), None);
        let star3 = path2.merge(&ColoredTreelet::singleton(2)).unwrap().unwrap();
        assert_eq!(star3.shape(), s(3, "1010"));
        assert_eq!(star3.colors(), 0b111);
        // a 2-path may not be prepended before a larger first child is present
        let path3_end = ColoredTreelet::singleton(2).merge(&path2).unwrap().unwrap();
        assert_eq!(path3_end.shape(), s(3, "1100"));
        let p2b = ColoredTreelet::singleton(3).merge(&ColoredTreelet::singleton(4)).unwrap().unwrap();
        assert_eq!(p2b.merge(&path3_end).unwrap().map(|t| t.size()), Some(5));
        assert_eq!(path3_end.merge(&ColoredTreelet::singleton(5)).unwrap(), None);
    }

    #[test]
    fn merge_size_overflow_is_an_error() {
        let big = TreeletShape::from_children(vec![TreeletShape::SINGLETON; 9]);
        let other = TreeletShape::from_children(vec![TreeletShape::SINGLETON; 7]);
        assert!(matches!(big.merge(&other), Err(Error::SizeOverflow(18))));
    }

    #[test]
    fn canonical_decomposition_examples() {
        let path3_end = ColoredTreelet::new(s(3, "1100"), 0b111).unwrap();
        let (t1, t2) = path3_end.canonical_decompose().unwrap();
        assert_eq!(t1.shape(), TreeletShape::SINGLETON);
        assert_eq!(t2.shape(), s(2, "10"));
        assert_eq!(t1.merge(&t2).unwrap(), Some(path3_end));

        let star3 = ColoredTreelet::new(s(3, "1010"), 0b111).unwrap();
        let (t1, t2) = star3.canonical_decompose().unwrap();
        assert_eq!(t1.shape(), s(2, "10"));
        assert_eq!(t2.shape(), TreeletShape::SINGLETON);
        assert_eq!(t1.merge(&t2).unwrap(), Some(star3));
        assert!(ColoredTreelet::singleton(1).canonical_decompose().is_err());
    }

    #[test]
    fn beta_counts_isomorphic_root_children() {
        let star3 = ColoredTreelet::new(s(3, "1010"), 0b111).unwrap();
        assert_eq!(star3.beta(), 2);
        let path3_end = ColoredTreelet::new(s(3, "1100"), 0b111).unwrap();
        assert_eq!(path3_end.beta(), 1);
        // spider: root with two 2-node legs and a leaf
        let spider = TreeletShape::from_children(vec![s(2, "10"), s(2, "10"), TreeletShape::SINGLETON]);
        assert_eq!(spider.multiplicity_of_child(&s(2, "10")), 2);
        let t = ColoredTreelet::new(spider, 0b111111).unwrap();
        assert_eq!(t.beta(), 2);
        assert!(t.beta() >= 1);
    }

    #[test]
    fn tree_round_trip_and_canonical_check() {
        for shape in enumerate_shapes(8) {
            assert_eq!(TreeletShape::from_tree(&shape.to_tree(), 0), shape);
            assert_eq!(TreeletShape::new(shape.size(), shape.bits()).unwrap(), shape);
        }
        // "1011 00" visits the leaf before the 2-path: not canonical
        assert!(TreeletShape::new(4, 0b101100).is_err());
        assert!(TreeletShape::new(3, 0b0110).is_err());
        assert!(TreeletShape::new(3, 0b1110).is_err());
    }

    #[test]
    fn encoding_fits_thirty_bits() {
        let path16 = (1..16).fold(TreeletShape::SINGLETON, |acc, _| TreeletShape::from_children(vec![acc]));
        assert_eq!(path16.size(), 16);
        assert!(path16.bits() < 1 << 30);
        assert_eq!(path16.bits(), ((1u32 << 15) - 1) << 15);
    }

    #[test]
    fn balanced_examples() {
        let path4 = s(4, "111000").unrooted();
        let split = path4.balanced_decompose().unwrap();
        assert_eq!(split.left, s(2, "10"));
        assert_eq!(split.right, s(2, "10"));
        assert_eq!(split.beta, 1);

        // chair: path on 4 nodes plus a leaf on the second node
        let adj = vec![vec![1], vec![0, 2, 4], vec![1, 3], vec![2], vec![1]];
        let chair = TreeletShape::from_tree(&adj, 0);
        let split = chair.balanced_decompose().unwrap();
        assert!(split.left.size() <= 3 && split.right.size() <= 3);
        assert_eq!(split.left.attach(&split.right), split.rep);

        let star4 = s(4, "101010");
        assert!(star4.balanced_decompose().is_err());
    }

    #[test]
    fn every_non_star_admits_a_balanced_cut() {
        for k in 4..=8 {
            let cat = ShapeCatalog::new(k);
            for (j, shape) in cat.free_shapes().iter().enumerate() {
                if shape.is_star() {
                    assert!(cat.balanced(j).is_none());
                    continue;
                }
                let split = cat.balanced(j).unwrap();
                assert!(split.left.size() <= k - 2 && split.right.size() <= k - 2);
                assert_eq!(split.left.attach(&split.right), split.rep);
                assert_eq!(split.rep.unrooted(), *shape);
            }
        }
    }

    #[test]
    fn order_is_size_bits_colors() {
        let a = ColoredTreelet::new(s(2, "10"), 0b11).unwrap();
        let b = ColoredTreelet::new(s(2, "10"), 0b101).unwrap();
        let c = ColoredTreelet::new(s(3, "1010"), 0b111).unwrap();
        let d = ColoredTreelet::new(s(3, "1100"), 0b111).unwrap();
        assert!(a < b && b < c && c < d);
        assert_eq!(compare(&a, &b), Ordering::Less);
        assert!(a.key() < b.key() && c.key() < d.key());
    }
}
