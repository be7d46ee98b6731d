//! Brute-force ground truth for small graphs.

use std::collections::{BTreeMap, HashMap};
use std::path::Path;

use crate::error::{Error, Result};
use crate::graph::{ColoredGraph, Graph};
use crate::graphlet::{extract_induced, GraphletSignature, SignatureCache};
use crate::treelet::{ColoredTreelet, ShapeCatalog, TreeletShape};

/// Default cap on the number of connected sets an enumeration may visit.
pub const DEFAULT_GUARD: u64 = 50_000_000;

/// Visits every connected node set of size `1..=k` exactly once (ESU),
/// skipping branches rejected by `admit(set, candidate)`.
fn for_each_connected_set(
    g: &Graph,
    k: usize,
    guard: u64,
    admit: &dyn Fn(&[u32], u32) -> bool,
    visit: &mut dyn FnMut(&[u32]) -> Result<()>,
) -> Result<()> {
    fn extend(
        g: &Graph,
        k: usize,
        root: u32,
        set: &mut Vec<u32>,
        ext: Vec<u32>,
        budget: &mut u64,
        admit: &dyn Fn(&[u32], u32) -> bool,
        visit: &mut dyn FnMut(&[u32]) -> Result<()>,
    ) -> Result<()> {
        if *budget == 0 {
            return Err(Error::ScaleGuard("too many connected node sets".into()));
        }
        *budget -= 1;
        visit(set)?;
        if set.len() == k {
            return Ok(());
        }
        let mut ext = ext;
        while let Some(w) = ext.pop() {
            if !admit(set, w) {
                continue;
            }
            let mut next = ext.clone();
            for &u in g.neighbors(w) {
                if u > root && !set.contains(&u) && u != w && !next.contains(&u) && !set.iter().any(|&s| g.has_edge(s, u)) {
                    next.push(u);
                }
            }
            set.push(w);
            extend(g, k, root, set, next, budget, admit, visit)?;
            set.pop();
        }
        Ok(())
    }
    let mut budget = guard;
    for v in 0..g.node_count() as u32 {
        let ext: Vec<u32> = g.neighbors(v).iter().copied().filter(|&u| u > v).collect();
        let mut set = vec![v];
        extend(g, k, v, &mut set, ext, &mut budget, admit, visit)?;
    }
    Ok(())
}

/// Induced copies of every connected `k`-node class.
pub fn exact_graphlet_counts(g: &Graph, k: usize) -> Result<BTreeMap<GraphletSignature, u64>> {
    exact_graphlet_counts_guarded(g, k, DEFAULT_GUARD)
}

pub fn exact_graphlet_counts_guarded(g: &Graph, k: usize, guard: u64) -> Result<BTreeMap<GraphletSignature, u64>> {
    crate::graph::check_k(k)?;
    let cache = SignatureCache::new();
    let mut out = BTreeMap::new();
    for_each_connected_set(g, k, guard, &|_, _| true, &mut |set| {
        if set.len() == k {
            let sig = cache.signature(&extract_induced(g, set)?);
            *out.entry(sig).or_insert(0) += 1;
        }
        Ok(())
    })?;
    Ok(out)
}

/// Induced copies of each class whose nodes carry pairwise distinct colors.
pub fn exact_colorful_graphlet_counts(g: &ColoredGraph, k: usize) -> Result<BTreeMap<GraphletSignature, u64>> {
    crate::graph::check_k(k)?;
    let cache = SignatureCache::new();
    let mut out = BTreeMap::new();
    let admit = |set: &[u32], w: u32| set.iter().all(|&s| g.color(s) != g.color(w));
    for_each_connected_set(g.graph(), k, DEFAULT_GUARD, &admit, &mut |set| {
        if set.len() == k {
            let sig = cache.signature(&extract_induced(g.graph(), set)?);
            *out.entry(sig).or_insert(0) += 1;
        }
        Ok(())
    })?;
    Ok(out)
}

/// Exact colorful treelet counts of a colored graph.
#[derive(Clone, Debug, Default)]
pub struct ColorfulTruth {
    /// c(T_C, v) for every size `1..=k`, zero entries omitted.
    pub rooted: HashMap<(u32, ColoredTreelet), u64>,
    /// Unrooted colorful `k`-treelet copies per shape id of [`ShapeCatalog`].
    pub shape_totals: Vec<u64>,
    pub total: u64,
}

impl ColorfulTruth {
    pub fn rooted_count(&self, v: u32, t: &ColoredTreelet) -> u64 {
        self.rooted.get(&(v, *t)).copied().unwrap_or(0)
    }

    /// Entries rooted at `v` of size `h`, sorted.
    pub fn entries(&self, h: usize, v: u32) -> Vec<(ColoredTreelet, u64)> {
        let mut out: Vec<_> = self
            .rooted
            .iter()
            .filter(|((u, t), _)| *u == v && t.size() == h)
            .map(|((_, t), c)| (*t, *c))
            .collect();
        out.sort_unstable();
        out
    }
}

/// Enumerates every colorful connected node set and every spanning tree of
/// it, so each copy (node set plus edge set) is seen once and classified at
/// each of its nodes as root.
pub fn exact_colorful_treelets(g: &ColoredGraph, k: usize) -> Result<ColorfulTruth> {
    exact_colorful_treelets_guarded(g, k, DEFAULT_GUARD)
}

pub fn exact_colorful_treelets_guarded(g: &ColoredGraph, k: usize, guard: u64) -> Result<ColorfulTruth> {
    crate::graph::check_k(k)?;
    let catalog = ShapeCatalog::new(k);
    let graph = g.graph();
    let colors = g.colors();
    let mut truth = ColorfulTruth {
        shape_totals: vec![0; catalog.len()],
        ..Default::default()
    };
    let admit = |set: &[u32], w: u32| set.iter().all(|&s| colors[s as usize] != colors[w as usize]);
    for_each_connected_set(graph, k, guard, &admit, &mut |set| {
        let h = set.len();
        let colorset = set.iter().fold(0u16, |m, &v| m | 1 << colors[v as usize]);
        let edges: Vec<(usize, usize)> = (0..h)
            .flat_map(|a| (a + 1..h).map(move |b| (a, b)))
            .filter(|&(a, b)| graph.has_edge(set[a], set[b]))
            .collect();
        for_each_spanning_tree(h, &edges, &mut |adj| {
            for (r, &v) in set.iter().enumerate() {
                let t = ColoredTreelet::new(TreeletShape::from_tree(adj, r), colorset).expect("colorful");
                *truth.rooted.entry((v, t)).or_insert(0) += 1;
            }
            if h == k {
                let j = catalog
                    .free_id(&TreeletShape::from_tree(adj, 0))
                    .expect("k-node tree has a free shape");
                truth.shape_totals[j] += 1;
                truth.total += 1;
            }
        });
        Ok(())
    })?;
    Ok(truth)
}

/// Every colorful `k`-treelet copy as its sorted edge list (smaller id first)
/// and unrooted shape id.
pub fn colorful_treelet_copies(g: &ColoredGraph, k: usize) -> Result<Vec<(Vec<(u32, u32)>, usize)>> {
    crate::graph::check_k(k)?;
    let catalog = ShapeCatalog::new(k);
    let graph = g.graph();
    let colors = g.colors();
    let mut out = Vec::new();
    let admit = |set: &[u32], w: u32| set.iter().all(|&s| colors[s as usize] != colors[w as usize]);
    for_each_connected_set(graph, k, DEFAULT_GUARD, &admit, &mut |set| {
        if set.len() < k {
            return Ok(());
        }
        let edges: Vec<(usize, usize)> = (0..k)
            .flat_map(|a| (a + 1..k).map(move |b| (a, b)))
            .filter(|&(a, b)| graph.has_edge(set[a], set[b]))
            .collect();
        for_each_spanning_tree(k, &edges, &mut |adj| {
            let mut tree: Vec<(u32, u32)> = Vec::with_capacity(k - 1);
            for (a, nb) in adj.iter().enumerate() {
                for &b in nb {
                    if a < b {
                        let (x, y) = (set[a], set[b]);
                        tree.push((x.min(y), x.max(y)));
                    }
                }
            }
            tree.sort_unstable();
            let j = catalog.free_id(&TreeletShape::from_tree(adj, 0)).expect("free shape");
            out.push((tree, j));
        });
        Ok(())
    })?;
    out.sort_unstable();
    Ok(out)
}

/// Calls `f` with the adjacency lists of every spanning tree of the graph on
/// `n` nodes with the given edges (edge subsets of size `n-1` without cycles).
fn for_each_spanning_tree(n: usize, edges: &[(usize, usize)], f: &mut dyn FnMut(&[Vec<usize>])) {
    fn find(p: &mut [usize], x: usize) -> usize {
        let mut x = x;
        while p[x] != x {
            p[x] = p[p[x]];
            x = p[x];
        }
        x
    }
    fn rec(n: usize, edges: &[(usize, usize)], start: usize, chosen: &mut Vec<usize>, f: &mut dyn FnMut(&[Vec<usize>])) {
        if chosen.len() == n - 1 {
            let mut p: Vec<usize> = (0..n).collect();
            for &e in chosen.iter() {
                let (a, b) = edges[e];
                let (ra, rb) = (find(&mut p, a), find(&mut p, b));
                if ra == rb {
                    return;
                }
                p[ra] = rb;
            }
            let mut adj = vec![Vec::new(); n];
            for &e in chosen.iter() {
                let (a, b) = edges[e];
                adj[a].push(b);
                adj[b].push(a);
            }
            f(&adj);
            return;
        }
        let need = n - 1 - chosen.len();
        for e in start..edges.len() {
            if edges.len() - e < need {
                break;
            }
            chosen.push(e);
            rec(n, edges, e + 1, chosen, f);
            chosen.pop();
        }
    }
    if n == 1 {
        f(&[Vec::new()]);
        return;
    }
    rec(n, edges, 0, &mut Vec::new(), f);
}

/// Writes ground truth as CSV: `signature_hex,count`.
pub fn write_truth_csv(path: &Path, counts: &BTreeMap<GraphletSignature, u64>) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(|e| Error::io(path, e.into()))?;
    w.write_record(["signature_hex", "count"]).map_err(|e| Error::io(path, e.into()))?;
    for (sig, c) in counts {
        w.write_record([sig.to_hex(), c.to_string()]).map_err(|e| Error::io(path, e.into()))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

/// Reads a truth CSV with columns `signature_hex` and `count` (extra columns ignored).
/// Counts may carry a fractional part.
pub fn read_truth_csv(path: &Path) -> Result<BTreeMap<GraphletSignature, f64>> {
    let mut r = csv::Reader::from_path(path).map_err(|e| Error::io(path, e.into()))?;
    let headers = r.headers().map_err(|e| Error::format(path, e.to_string()))?.clone();
    let col = |name: &str| headers.iter().position(|h| h == name);
    let sig_col = col("signature_hex").ok_or_else(|| Error::format(path, "missing signature_hex column"))?;
    let cnt_col = col("count")
        .or_else(|| col("count_estimate"))
        .ok_or_else(|| Error::format(path, "missing count column"))?;
    let mut out = BTreeMap::new();
    for (i, rec) in r.records().enumerate() {
        let rec = rec.map_err(|e| Error::format(path, e.to_string()))?;
        let sig: GraphletSignature = rec[sig_col].parse().map_err(|_| Error::Parse {
            line: i + 2,
            msg: "bad signature".into(),
        })?;
        let c: f64 = rec[cnt_col].parse().map_err(|_| Error::Parse {
            line: i + 2,
            msg: "bad count".into(),
        })?;
        out.insert(sig, c);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use std::sync::Arc;

    use super::*;
    use crate::graphlet::{canonical_signature, SmallGraph};

    fn sig(edges: &[(usize, usize)], n: usize) -> GraphletSignature {
        canonical_signature(&SmallGraph::from_edges(n, edges))
    }

    #[test]
    fn graphlet_examples() {
        let tri = Graph::from_edges(3, &[(0, 1), (1, 2), (0, 2)]).unwrap();
        let c = exact_graphlet_counts(&tri, 3).unwrap();
        assert_eq!(c.into_iter().collect::<Vec<_>>(), vec![(sig(&[(0, 1), (1, 2), (0, 2)], 3), 1)]);
        let c4 = Graph::from_edges(4, &[(0, 1), (1, 2), (2, 3), (3, 0)]).unwrap();
        let c = exact_graphlet_counts(&c4, 3).unwrap();
        assert_eq!(c.into_iter().collect::<Vec<_>>(), vec![(sig(&[(0, 1), (1, 2)], 3), 4)]);
        let k5: Vec<(u32, u32)> = (0..5).flat_map(|a| (a + 1..5).map(move |b| (a, b))).collect();
        let c = exact_graphlet_counts(&Graph::from_edges(5, &k5).unwrap(), 4).unwrap();
        assert_eq!(c.values().copied().collect::<Vec<_>>(), vec![5]);
    }

    #[test]
    fn scale_guard_refuses() {
        let k5: Vec<(u32, u32)> = (0..5).flat_map(|a| (a + 1..5).map(move |b| (a, b))).collect();
        let g = Graph::from_edges(5, &k5).unwrap();
        assert!(matches!(exact_graphlet_counts_guarded(&g, 4, 10), Err(Error::ScaleGuard(_))));
    }

    #[test]
    fn colorful_examples() {
        let tri = Arc::new(Graph::from_edges(3, &[(0, 1), (1, 2), (0, 2)]).unwrap());
        let t = exact_colorful_treelets(&ColoredGraph::with_colors(tri.clone(), 3, vec![0, 1, 2]).unwrap(), 3).unwrap();
        assert_eq!(t.total, 3);
        let mono = exact_colorful_treelets(&ColoredGraph::with_colors(tri, 3, vec![1, 1, 1]).unwrap(), 3).unwrap();
        assert_eq!(mono.total, 0);
        let path = Arc::new(Graph::from_edges(3, &[(0, 1), (1, 2)]).unwrap());
        let t = exact_colorful_treelets(&ColoredGraph::with_colors(path, 3, vec![0, 1, 2]).unwrap(), 3).unwrap();
        assert_eq!(t.total, 1);
    }

    #[test]
    fn spanning_tree_enumeration_counts() {
        let k4: Vec<(usize, usize)> = (0..4).flat_map(|a| (a + 1..4).map(move |b| (a, b))).collect();
        let mut n = 0;
        for_each_spanning_tree(4, &k4, &mut |_| n += 1);
        assert_eq!(n, 16);
    }

    #[test]
    fn truth_csv_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("t.csv");
        let mut m = BTreeMap::new();
        m.insert(GraphletSignature(5 << 100), 7u64);
        write_truth_csv(&p, &m).unwrap();
        let back = read_truth_csv(&p).unwrap();
        assert_eq!(back.get(&GraphletSignature(5 << 100)), Some(&7.0));
    }
}
