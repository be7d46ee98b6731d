//! Identification of sampled node sets: induced subgraphs, canonical
//! 128-bit signatures, spanning-tree counts and spanning profiles.

use std::fmt;
use std::str::FromStr;

use dashmap::DashMap;

use crate::error::{Error, Result};
use crate::graph::{Graph, MAX_K};

mod canon;
pub mod census;
mod kirchhoff;
mod profile;

pub use census::{class_count, connected_classes};
pub use kirchhoff::spanning_trees;
pub use profile::{ProfileCache, SpanningProfile, TableSemantics};

/// Graph on at most 16 nodes as adjacency bitmasks.
#[derive(Clone, Copy, PartialEq, Eq, Hash)]
pub struct SmallGraph {
    pub(crate) n: usize,
    pub(crate) adj: [u16; MAX_K],
}

impl fmt::Debug for SmallGraph {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "SmallGraph({}, {:?})", self.n, self.edges().collect::<Vec<_>>())
    }
}

impl SmallGraph {
    pub fn empty(n: usize) -> SmallGraph {
        assert!(n <= MAX_K, "at most {MAX_K} nodes");
        SmallGraph { n, adj: [0; MAX_K] }
    }

    pub fn from_edges(n: usize, edges: &[(usize, usize)]) -> SmallGraph {
        let mut g = SmallGraph::empty(n);
        for &(a, b) in edges {
            g.add_edge(a, b);
        }
        g
    }

    pub fn add_edge(&mut self, a: usize, b: usize) {
        assert!(a < self.n && b < self.n && a != b);
        self.adj[a] |= 1 << b;
        self.adj[b] |= 1 << a;
    }

    pub fn node_count(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn has_edge(&self, a: usize, b: usize) -> bool {
        self.adj[a] >> b & 1 == 1
    }

    pub fn degree(&self, v: usize) -> usize {
        self.adj[v].count_ones() as usize
    }

    pub fn edge_count(&self) -> usize {
        (0..self.n).map(|v| self.degree(v)).sum::<usize>() / 2
    }

    pub fn edges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        (0..self.n).flat_map(move |a| (a + 1..self.n).filter(move |&b| self.has_edge(a, b)).map(move |b| (a, b)))
    }

    pub fn is_connected(&self) -> bool {
        if self.n == 0 {
            return true;
        }
        let mut seen: u16 = 1;
        let mut frontier: u16 = 1;
        while frontier != 0 {
            let mut next = 0;
            for v in 0..self.n {
                if frontier >> v & 1 == 1 {
                    next |= self.adj[v];
                }
            }
            frontier = next & !seen;
            seen |= next;
        }
        seen.count_ones() as usize == self.n
    }

    /// Twins: equal neighborhoods apart from each other.
    #[inline]
    pub(crate) fn twins(&self, a: usize, b: usize) -> bool {
        self.adj[a] & !(1 << b) == self.adj[b] & !(1 << a)
    }

    /// Graph whose node `l` is node `order[l]` of `self`.
    pub fn permuted(&self, order: &[usize]) -> SmallGraph {
        let mut g = SmallGraph::empty(self.n);
        for i in 0..self.n {
            for j in i + 1..self.n {
                if self.has_edge(order[i], order[j]) {
                    g.add_edge(i, j);
                }
            }
        }
        g
    }

    /// Upper triangle, row by row, with pair `(0,1)` in the most significant bit.
    pub fn packed(&self) -> u128 {
        let mut out = 0u128;
        let mut bit = 127;
        for i in 0..self.n {
            for j in i + 1..self.n {
                if self.has_edge(i, j) {
                    out |= 1 << bit;
                }
                bit -= 1;
            }
        }
        out
    }

    pub fn from_packed(n: usize, packed: u128) -> SmallGraph {
        let mut g = SmallGraph::empty(n);
        let mut bit = 127;
        for i in 0..n {
            for j in i + 1..n {
                if packed >> bit & 1 == 1 {
                    g.add_edge(i, j);
                }
                bit -= 1;
            }
        }
        g
    }
}

/// Induced subgraph of `g` on `nodes`, node `i` of the result being `nodes[i]`.
pub fn extract_induced(g: &Graph, nodes: &[u32]) -> Result<SmallGraph> {
    if nodes.len() > MAX_K {
        return Err(Error::SizeOverflow(nodes.len()));
    }
    for (i, a) in nodes.iter().enumerate() {
        if nodes[..i].contains(a) {
            return Err(Error::invalid(format!("duplicate node {a}")));
        }
        if *a as usize >= g.node_count() {
            return Err(Error::invalid(format!("node {a} out of range")));
        }
    }
    let mut s = SmallGraph::empty(nodes.len());
    for i in 0..nodes.len() {
        for j in i + 1..nodes.len() {
            if g.has_edge(nodes[i], nodes[j]) {
                s.add_edge(i, j);
            }
        }
    }
    Ok(s)
}

/// Canonical packed adjacency of a graphlet class.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct GraphletSignature(pub u128);

impl GraphletSignature {
    pub fn to_graph(self, k: usize) -> SmallGraph {
        SmallGraph::from_packed(k, self.0)
    }

    pub fn to_hex(self) -> String {
        format!("{:032x}", self.0)
    }
}

impl fmt::Display for GraphletSignature {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:032x}", self.0)
    }
}

impl fmt::Debug for GraphletSignature {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Sig({self})")
    }
}

impl FromStr for GraphletSignature {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        if s.len() != 32 {
            return Err(Error::invalid(format!("signature must be 32 hex digits: {s:?}")));
        }
        u128::from_str_radix(s, 16)
            .map(GraphletSignature)
            .map_err(|_| Error::invalid(format!("bad signature {s:?}")))
    }
}

/// Canonical signature; equal exactly for isomorphic graphs.
pub fn canonical_signature(g: &SmallGraph) -> GraphletSignature {
    GraphletSignature(canon::canonical_form(g).0)
}

/// Canonical signatures memoized by raw adjacency, safe to share across threads.
#[derive(Default)]
pub struct SignatureCache {
    memo: DashMap<u128, GraphletSignature>,
}

impl SignatureCache {
    pub fn new() -> SignatureCache {
        SignatureCache::default()
    }

    pub fn signature(&self, g: &SmallGraph) -> GraphletSignature {
        let key = g.packed() | g.n as u128;
        if let Some(s) = self.memo.get(&key) {
            return *s;
        }
        let s = canonical_signature(g);
        self.memo.insert(key, s);
        s
    }

    pub fn len(&self) -> usize {
        self.memo.len()
    }

    pub fn is_empty(&self) -> bool {
        self.memo.is_empty()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn all_perms(n: usize) -> Vec<Vec<usize>> {
        if n == 0 {
            return vec![Vec::new()];
        }
        let mut out = Vec::new();
        for p in all_perms(n - 1) {
            for pos in 0..n {
                let mut q = p.clone();
                q.insert(pos, n - 1);
                out.push(q);
            }
        }
        out
    }

    #[test]
    fn triangle_under_all_orderings() {
        let k3 = SmallGraph::from_edges(3, &[(0, 1), (1, 2), (0, 2)]);
        let sigs: Vec<_> = all_perms(3).iter().map(|p| canonical_signature(&k3.permuted(p))).collect();
        assert!(sigs.windows(2).all(|w| w[0] == w[1]));
        assert_eq!(sigs[0].to_hex().len(), 32);
        assert_eq!(sigs[0].to_hex().parse::<GraphletSignature>().unwrap(), sigs[0]);
    }

    #[test]
    fn agrees_with_brute_force_classes() {
        // brute-force canonical form: largest packing over all relabelings
        use std::collections::HashMap;
        for n in 2..=6usize {
            let perms = all_perms(n);
            let pairs = n * (n - 1) / 2;
            let step = if n == 6 { 37 } else { 1 };
            let mut ours_to_brute: HashMap<GraphletSignature, u128> = HashMap::new();
            let mut brute_to_ours: HashMap<u128, GraphletSignature> = HashMap::new();
            for mask in (0u128..1 << pairs).step_by(step) {
                let g = SmallGraph::from_packed(n, mask << (128 - pairs));
                let brute = perms.iter().map(|p| g.permuted(p).packed()).max().unwrap();
                let ours = canonical_signature(&g);
                assert!(perms.iter().any(|p| g.permuted(p).packed() == ours.0));
                assert_eq!(*ours_to_brute.entry(ours).or_insert(brute), brute);
                assert_eq!(*brute_to_ours.entry(brute).or_insert(ours), ours);
                for p in perms.iter().step_by(97) {
                    assert_eq!(canonical_signature(&g.permuted(p)), ours);
                }
            }
        }
    }

    #[test]
    fn symmetric_graphs_terminate() {
        let mut k16 = SmallGraph::empty(16);
        for a in 0..16 {
            for b in a + 1..16 {
                k16.add_edge(a, b);
            }
        }
        assert_eq!(canonical_signature(&k16).0 >> 8, (1u128 << 120) - 1);
        // 4x4 rook's graph: vertex-transitive, no twins
        let mut rook = SmallGraph::empty(16);
        for a in 0..16 {
            for b in a + 1..16 {
                if a / 4 == b / 4 || a % 4 == b % 4 {
                    rook.add_edge(a, b);
                }
            }
        }
        let order: Vec<usize> = (0..16).map(|i| (i * 5) % 16).collect();
        assert_eq!(canonical_signature(&rook), canonical_signature(&rook.permuted(&order)));
    }

    #[test]
    fn extraction() {
        let g = Graph::from_edges(4, &[(0, 1), (1, 2), (2, 3)]).unwrap();
        let s = extract_induced(&g, &[0, 1, 2]).unwrap();
        assert_eq!(s.edge_count(), 2);
        assert!(s.is_connected());
        assert!(!extract_induced(&g, &[0, 2, 3]).unwrap().is_connected());
        assert!(extract_induced(&g, &[0, 0, 1]).is_err());
    }

    #[test]
    fn cache_matches_direct() {
        let c = SignatureCache::new();
        let p4 = SmallGraph::from_edges(4, &[(0, 1), (1, 2), (2, 3)]);
        assert_eq!(c.signature(&p4), canonical_signature(&p4));
        assert_eq!(c.signature(&p4), canonical_signature(&p4.permuted(&[2, 0, 3, 1])));
        assert_eq!(c.len(), 1);
    }
}
