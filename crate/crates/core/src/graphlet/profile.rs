use std::sync::Arc;

use dashmap::DashMap;

use super::{GraphletSignature, SmallGraph};
use crate::buildup::dp::SplitIndex;
use crate::buildup::{build_memory_with, Algebra, BuildOptions};
use crate::error::{Error, Result};
use crate::graph::{ColoredGraph, Graph};
use crate::treelet::{ShapeCatalog, TreeletIndexTables};

/// The counting conventions of a table build that affect per-shape totals.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct TableSemantics {
    pub skip_round: bool,
    pub zero_root: bool,
}

impl TableSemantics {
    fn options(self) -> BuildOptions {
        BuildOptions {
            vlc: false,
            skip_round: self.skip_round,
            zero_root: self.zero_root,
            threads: 1,
        }
    }
}

/// σ_ij for one graphlet class: spanning trees of each unrooted shape `j`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SpanningProfile {
    pub sigma: Vec<u64>,
}

impl SpanningProfile {
    pub fn total(&self) -> u64 {
        self.sigma.iter().sum()
    }
}

/// Spanning profiles computed by running the table recurrence on the
/// graphlet itself with every node colored distinctly, memoized per class.
pub struct ProfileCache {
    k: usize,
    semantics: TableSemantics,
    catalog: Arc<ShapeCatalog>,
    alg: Algebra,
    splits: Option<SplitIndex>,
    memo: DashMap<GraphletSignature, Arc<SpanningProfile>>,
}

impl ProfileCache {
    pub fn new(
        k: usize,
        semantics: TableSemantics,
        catalog: Arc<ShapeCatalog>,
        ite: Option<Arc<TreeletIndexTables>>,
    ) -> Result<ProfileCache> {
        crate::graph::check_k(k)?;
        if catalog.k() != k {
            return Err(Error::invalid("shape catalog built for another k"));
        }
        let alg = match ite {
            Some(t) if k <= 8 && t.k() == k => Algebra::Ite(t),
            _ => Algebra::Plain,
        };
        let splits = if semantics.skip_round {
            Some(SplitIndex::new(&catalog, &alg)?)
        } else {
            None
        };
        Ok(ProfileCache {
            k,
            semantics,
            catalog,
            alg,
            splits,
            memo: DashMap::new(),
        })
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn catalog(&self) -> &Arc<ShapeCatalog> {
        &self.catalog
    }

    pub fn get(&self, sig: GraphletSignature) -> Result<Arc<SpanningProfile>> {
        if let Some(p) = self.memo.get(&sig) {
            return Ok(Arc::clone(&p));
        }
        let p = Arc::new(self.compute(&sig.to_graph(self.k))?);
        self.memo.insert(sig, Arc::clone(&p));
        Ok(p)
    }

    /// Profile of an arbitrary connected `k`-node graph (not memoized).
    pub fn compute(&self, g: &SmallGraph) -> Result<SpanningProfile> {
        if g.node_count() != self.k || !g.is_connected() {
            return Err(Error::invalid("spanning profiles need a connected k-node graph"));
        }
        let edges: Vec<(u32, u32)> = g.edges().map(|(a, b)| (a as u32, b as u32)).collect();
        let host = Graph::from_edges(self.k, &edges)?;
        let colored = ColoredGraph::with_colors(Arc::new(host), self.k, (0..self.k as u8).collect())?;
        let tables = build_memory_with(&colored, &self.semantics.options(), &self.alg, &self.catalog, self.splits.as_ref())?;
        let mut sigma: Vec<u64> = tables
            .shape_totals()
            .iter()
            .map(|s| u64::try_from(s.total).map_err(|_| Error::Overflow("spanning tree count".into())))
            .collect::<Result<_>>()?;
        if self.semantics.skip_round {
            sigma[self.catalog.star()] = (0..self.k).filter(|&v| g.degree(v) == self.k - 1).count() as u64;
        }
        Ok(SpanningProfile { sigma })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graphlet::{canonical_signature, connected_classes, spanning_trees};

    fn cache(k: usize, skip: bool) -> ProfileCache {
        let sem = TableSemantics {
            skip_round: skip,
            zero_root: !skip,
        };
        let ite = (k <= 8).then(|| Arc::new(TreeletIndexTables::new(k).unwrap()));
        ProfileCache::new(k, sem, Arc::new(ShapeCatalog::new(k)), ite).unwrap()
    }

    #[test]
    fn triangle_has_three_spanning_paths() {
        let c = cache(3, false);
        let tri = SmallGraph::from_edges(3, &[(0, 1), (1, 2), (0, 2)]);
        assert_eq!(c.compute(&tri).unwrap().sigma, vec![3]);
    }

    #[test]
    fn star_graphlet_only_spans_the_star() {
        for k in 4..=7 {
            for skip in [false, true] {
                let c = cache(k, skip);
                let star = SmallGraph::from_edges(k, &(1..k).map(|i| (0, i)).collect::<Vec<_>>());
                let p = c.compute(&star).unwrap();
                for (j, s) in p.sigma.iter().enumerate() {
                    assert_eq!(*s, u64::from(j == c.catalog().star()), "k={k} j={j}");
                }
            }
        }
    }

    #[test]
    fn profiles_sum_to_kirchhoff_and_agree_across_semantics() {
        for k in 4..=6 {
            let (a, b) = (cache(k, false), cache(k, true));
            for sig in connected_classes(k).unwrap() {
                let g = sig.to_graph(k);
                let pa = a.get(sig).unwrap();
                let pb = b.get(sig).unwrap();
                assert_eq!(pa.sigma, pb.sigma, "k={k} {g:?}");
                assert_eq!(pa.total(), spanning_trees(&g));
                assert_eq!(canonical_signature(&g), sig);
            }
        }
    }
}
