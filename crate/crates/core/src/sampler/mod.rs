//! Uniform sampling of colorful treelet copies from count tables, of
//! uncolored stars from degrees, of colorful stars from node colors, and of
//! graphlets as a mixture of table copies and uncolored stars.

use std::collections::HashMap;
use std::sync::OnceLock;

use rand::Rng;

use crate::buildup::{CountTable, TableSet};
use crate::count::{self, Count};
use crate::error::{Error, Result};
use crate::graph::Graph;
use crate::treelet::{BalancedSplit, ColoredTreelet, TreeletShape};

pub mod alias;
pub mod buffer;

pub use alias::AliasTable;
pub use buffer::{BufferConfig, NeighborBuffer};

/// A sampled colorful treelet copy.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TreeletCopy {
    pub root: u32,
    pub treelet: ColoredTreelet,
    /// Unrooted shape id.
    pub shape: usize,
    pub nodes: Vec<u32>,
    pub edges: Vec<(u32, u32)>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Source {
    Star,
    Treelet,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GraphletSample {
    pub nodes: Vec<u32>,
    pub source: Source,
}

/// One round in a form that supports binary search on cumulative counts.
enum RoundView<'a> {
    Fixed(&'a CountTable),
    Loaded {
        offsets: Vec<usize>,
        keys: Vec<u64>,
        cum: Vec<Count>,
    },
}

impl<'a> RoundView<'a> {
    fn new(t: &'a CountTable) -> Result<RoundView<'a>> {
        if !t.is_vlc() {
            return Ok(RoundView::Fixed(t));
        }
        let n = t.node_count();
        let mut offsets = Vec::with_capacity(n + 1);
        let mut keys = Vec::new();
        let mut cum = Vec::new();
        offsets.push(0);
        for v in 0..n as u32 {
            let mut acc = Count::ZERO;
            let mut err = None;
            t.for_each_raw(v, |id, c| match count::add(acc, c) {
                Ok(s) => {
                    acc = s;
                    keys.push(t.key_of(id));
                    cum.push(acc);
                }
                Err(e) => err = Some(e),
            })?;
            if let Some(e) = err {
                return Err(e);
            }
            offsets.push(keys.len());
        }
        Ok(RoundView::Loaded { offsets, keys, cum })
    }

    #[inline]
    fn len(&self, v: u32) -> usize {
        match self {
            RoundView::Fixed(t) => t.fixed_len(v),
            RoundView::Loaded { offsets, .. } => offsets[v as usize + 1] - offsets[v as usize],
        }
    }

    #[inline]
    fn key_at(&self, v: u32, i: usize) -> u64 {
        match self {
            RoundView::Fixed(t) => t.fixed_at(v, i).0,
            RoundView::Loaded { offsets, keys, .. } => keys[offsets[v as usize] + i],
        }
    }

    #[inline]
    fn cum_at(&self, v: u32, i: usize) -> Count {
        match self {
            RoundView::Fixed(t) => Count::from(t.fixed_at(v, i).1),
            RoundView::Loaded { offsets, cum, .. } => cum[offsets[v as usize] + i],
        }
    }

    #[inline]
    fn count_at(&self, v: u32, i: usize) -> Count {
        let c = self.cum_at(v, i);
        if i == 0 {
            c
        } else {
            c - self.cum_at(v, i - 1)
        }
    }

    fn total(&self, v: u32) -> Count {
        match self.len(v) {
            0 => Count::ZERO,
            l => self.cum_at(v, l - 1),
        }
    }

    fn lower_bound(&self, v: u32, key: u64) -> usize {
        let (mut lo, mut hi) = (0, self.len(v));
        while lo < hi {
            let mid = (lo + hi) / 2;
            if self.key_at(v, mid) < key {
                lo = mid + 1;
            } else {
                hi = mid;
            }
        }
        lo
    }

    fn count(&self, v: u32, key: u64) -> Count {
        let i = self.lower_bound(v, key);
        if i < self.len(v) && self.key_at(v, i) == key {
            self.count_at(v, i)
        } else {
            Count::ZERO
        }
    }

    /// First entry whose cumulative count exceeds `x`.
    fn locate(&self, v: u32, x: &Count) -> usize {
        let (mut lo, mut hi) = (0, self.len(v));
        while lo < hi {
            let mid = (lo + hi) / 2;
            if self.cum_at(v, mid) <= *x {
                lo = mid + 1;
            } else {
                hi = mid;
            }
        }
        lo
    }

    /// Calls `f(colors, count)` for the entries of `v` with the given shape.
    fn for_shape(&self, v: u32, shape: &TreeletShape, mut f: impl FnMut(u16, Count) -> bool) {
        let bits = shape.bits() as u64;
        let mut i = self.lower_bound(v, bits << 16);
        let len = self.len(v);
        while i < len {
            let key = self.key_at(v, i);
            if key >> 16 != bits {
                break;
            }
            if !f(key as u16, self.count_at(v, i)) {
                break;
            }
            i += 1;
        }
    }
}

/// Uniform sampler over the uncolored `k`-stars of a graph.
#[derive(Clone, Debug)]
pub struct StarSampler {
    k: usize,
    centers: Vec<u32>,
    alias: AliasTable,
}

impl StarSampler {
    pub fn new(g: &Graph, k: usize) -> Result<StarSampler> {
        let mut centers = Vec::new();
        let mut weights = Vec::new();
        for v in 0..g.node_count() as u32 {
            let d = g.degree(v);
            if d + 1 >= k {
                centers.push(v);
                weights.push(count::binomial(d as u64, k as u64 - 1)?);
            }
        }
        if centers.is_empty() {
            return Err(Error::NoneExist(format!("no node has degree >= {}", k - 1)));
        }
        Ok(StarSampler {
            k,
            centers,
            alias: AliasTable::new(&weights)?,
        })
    }

    pub fn total(&self) -> Count {
        self.alias.total()
    }

    /// Center first, then `k-1` distinct neighbors.
    pub fn sample<R: Rng + ?Sized>(&self, g: &Graph, rng: &mut R) -> Vec<u32> {
        let v = self.centers[self.alias.sample(rng)];
        let nbrs = g.neighbors(v);
        let mut out = Vec::with_capacity(self.k);
        out.push(v);
        for i in rand::seq::index::sample(rng, nbrs.len(), self.k - 1) {
            out.push(nbrs[i]);
        }
        out
    }
}

/// Uniform sampler over the colorful `k`-stars of a colored graph.
///
/// A colorful star centered at `v` picks `k-1` neighbors with distinct colors,
/// none equal to the color of `v`, so the count at `v` is the elementary
/// symmetric polynomial `e_{k-1}` of the per-color neighbor counts.
#[derive(Clone, Debug)]
pub struct ColorfulStarSampler {
    k: usize,
    colors: Vec<u8>,
    centers: Vec<u32>,
    alias: AliasTable,
}

fn color_counts(g: &Graph, colors: &[u8], v: u32, k: usize) -> Vec<u64> {
    let mut n = vec![0u64; k];
    for &u in g.neighbors(v) {
        n[colors[u as usize] as usize] += 1;
    }
    n[colors[v as usize] as usize] = 0;
    n
}

/// `suffix[i][r]` is `e_r` over colors `i..`.
fn suffix_elementary(n: &[u64], r_max: usize) -> Result<Vec<Vec<Count>>> {
    let mut suffix = vec![vec![Count::ZERO; r_max + 1]; n.len() + 1];
    suffix[n.len()][0] = Count::from(1u64);
    for i in (0..n.len()).rev() {
        for r in 0..=r_max {
            let mut e = suffix[i + 1][r];
            if r > 0 && n[i] > 0 {
                e = count::add(e, count::mul(suffix[i + 1][r - 1], count::from_u64(n[i]))?)?;
            }
            suffix[i][r] = e;
        }
    }
    Ok(suffix)
}

impl ColorfulStarSampler {
    pub fn new(g: &Graph, colors: &[u8], k: usize) -> Result<ColorfulStarSampler> {
        if colors.len() != g.node_count() {
            return Err(Error::Mismatch(format!("{} colors for {} nodes", colors.len(), g.node_count())));
        }
        let mut centers = Vec::new();
        let mut weights = Vec::new();
        for v in 0..g.node_count() as u32 {
            if g.degree(v) + 1 < k {
                continue;
            }
            let w = suffix_elementary(&color_counts(g, colors, v, k), k - 1)?[0][k - 1];
            if !w.is_zero() {
                centers.push(v);
                weights.push(w);
            }
        }
        if centers.is_empty() {
            return Err(Error::NoneExist(format!("no colorful {k}-star")));
        }
        Ok(ColorfulStarSampler {
            k,
            colors: colors.to_vec(),
            centers,
            alias: AliasTable::new(&weights)?,
        })
    }

    pub fn total(&self) -> Count {
        self.alias.total()
    }

    /// Center first, then one neighbor of each chosen color.
    pub fn sample<R: Rng + ?Sized>(&self, g: &Graph, rng: &mut R) -> Result<Vec<u32>> {
        let v = self.centers[self.alias.sample(rng)];
        let n = color_counts(g, &self.colors, v, self.k);
        let suffix = suffix_elementary(&n, self.k - 1)?;
        let mut out = Vec::with_capacity(self.k);
        out.push(v);
        let mut r = self.k - 1;
        for c in 0..n.len() {
            if r == 0 {
                break;
            }
            if n[c] == 0 {
                continue;
            }
            let take = count::mul(suffix[c + 1][r - 1], count::from_u64(n[c]))?;
            if count::random_below(rng, &suffix[c][r]) < take {
                let pick = rng.gen_range(0..n[c]);
                let u = g
                    .neighbors(v)
                    .iter()
                    .copied()
                    .filter(|&u| self.colors[u as usize] as usize == c)
                    .nth(pick as usize)
                    .expect("neighbor of the chosen color");
                out.push(u);
                r -= 1;
            }
        }
        Ok(out)
    }
}

/// Per-worker mutable sampling state.
#[derive(Debug, Default)]
pub struct SamplerState {
    pub config: BufferConfig,
    pub buffer: NeighborBuffer,
}

impl SamplerState {
    pub fn new(config: BufferConfig) -> SamplerState {
        SamplerState {
            config,
            buffer: NeighborBuffer::new(),
        }
    }
}

/// Read-only sampling structures over a table set; share it across workers.
pub struct TableSampler<'a> {
    tables: &'a TableSet,
    graph: &'a Graph,
    k: usize,
    views: Vec<Option<RoundView<'a>>>,
    root_alias: Option<AliasTable>,
    /// Rooted `k`-shape bits to unrooted shape id.
    shape_of_bits: HashMap<u32, usize>,
    multiplicity: Vec<u32>,
    min_multiplicity: u32,
    shape_alias: Vec<OnceLock<Option<AliasTable>>>,
    star: Option<StarSampler>,
    star_probability: f64,
    colorful_star: OnceLock<Option<ColorfulStarSampler>>,
}

impl<'a> TableSampler<'a> {
    pub fn new(tables: &'a TableSet, graph: &'a Graph) -> Result<TableSampler<'a>> {
        let k = tables.k();
        if graph.node_count() != tables.node_count() {
            return Err(Error::Mismatch(format!(
                "graph has {} nodes, tables {}",
                graph.node_count(),
                tables.node_count()
            )));
        }
        let mut views = Vec::with_capacity(k + 1);
        views.push(None);
        for h in 1..=k {
            views.push(tables.round(h).map(RoundView::new).transpose()?);
        }
        let fin = views[k].as_ref().expect("final round");
        let etas: Vec<Count> = (0..graph.node_count() as u32).map(|v| fin.total(v)).collect();
        let root_alias = if etas.iter().any(|c| !c.is_zero()) {
            Some(AliasTable::new(&etas)?)
        } else {
            None
        };
        let catalog = tables.catalog();
        let mut shape_of_bits = HashMap::new();
        for j in 0..catalog.len() {
            for r in catalog.rootings(j) {
                shape_of_bits.insert(r.bits(), j);
            }
        }
        let multiplicity: Vec<u32> = tables.shape_totals().iter().map(|s| s.multiplicity).collect();
        let min_multiplicity = tables
            .shape_totals()
            .iter()
            .filter(|s| s.multiplicity > 0 && !s.total.is_zero())
            .map(|s| s.multiplicity)
            .min()
            .unwrap_or(1);
        let (star, star_probability) = if tables.round_skipped() {
            let star = StarSampler::new(graph, k).ok();
            let pk = crate::estimate::coloring_probability(k, tables.lambda())?;
            let ps = num_traits::ToPrimitive::to_f64(&pk).unwrap_or(0.0) * count::to_f64(&tables.star_total());
            let pt = count::to_f64(&tables.total());
            let p = if ps + pt > 0.0 { ps / (ps + pt) } else { 0.0 };
            (star, p)
        } else {
            (None, 0.0)
        };
        Ok(TableSampler {
            tables,
            graph,
            k,
            views,
            root_alias,
            shape_of_bits,
            multiplicity,
            min_multiplicity,
            shape_alias: (0..catalog.len()).map(|_| OnceLock::new()).collect(),
            star,
            star_probability,
            colorful_star: OnceLock::new(),
        })
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn tables(&self) -> &TableSet {
        self.tables
    }

    pub fn graph(&self) -> &Graph {
        self.graph
    }

    pub fn star_sampler(&self) -> Option<&StarSampler> {
        self.star.as_ref()
    }

    /// Probability of the star branch in [`TableSampler::sample_uniform_graphlet`].
    pub fn star_probability(&self) -> f64 {
        self.star_probability
    }

    fn view(&self, h: usize) -> Result<&RoundView<'a>> {
        self.views
            .get(h)
            .and_then(|v| v.as_ref())
            .ok_or_else(|| Error::invalid(format!("round {h} is not available")))
    }

    fn split_for(&self, t: &ColoredTreelet) -> Option<&BalancedSplit> {
        if t.size() == self.k && self.tables.round_skipped() {
            let j = *self.shape_of_bits.get(&t.shape().bits())?;
            self.tables.catalog().balanced(j)
        } else {
            None
        }
    }

    /// A colorful `k`-treelet copy drawn uniformly among those in the table
    /// (non-star copies when round-skipped).
    pub fn sample_treelet_copy<R: Rng + ?Sized>(&self, st: &mut SamplerState, rng: &mut R) -> Result<TreeletCopy> {
        let alias = self
            .root_alias
            .as_ref()
            .ok_or_else(|| Error::NoneExist("no colorful treelets in the table".into()))?;
        let fin = self.view(self.k)?;
        loop {
            let v = alias.sample(rng) as u32;
            let x = count::random_below(rng, &fin.total(v));
            let i = fin.locate(v, &x);
            let t = ColoredTreelet::from_key(fin.key_at(v, i));
            let j = self.shape_of_bits[&t.shape().bits()];
            let m = self.multiplicity[j].max(1);
            if m > self.min_multiplicity && rng.gen_range(0..m) >= self.min_multiplicity {
                continue;
            }
            return self.expand_root(st, rng, v, t, j);
        }
    }

    /// A copy of unrooted shape `j` drawn uniformly among its colorful copies.
    pub fn sample_shape_copy<R: Rng + ?Sized>(&self, st: &mut SamplerState, rng: &mut R, j: usize) -> Result<TreeletCopy> {
        let fin = self.view(self.k)?;
        let alias = self.shape_alias.get(j).ok_or_else(|| Error::invalid(format!("no shape {j}")))?;
        let alias = alias.get_or_init(|| {
            let weights: Vec<Count> = (0..self.graph.node_count() as u32)
                .map(|v| {
                    let mut s = Count::ZERO;
                    for i in 0..fin.len(v) {
                        if self.shape_of_bits.get(&((fin.key_at(v, i) >> 16) as u32)) == Some(&j) {
                            s += fin.count_at(v, i);
                        }
                    }
                    s
                })
                .collect();
            AliasTable::new(&weights).ok()
        });
        let alias = alias
            .as_ref()
            .ok_or_else(|| Error::NoneExist(format!("no colorful copies of shape {j}")))?;
        let v = alias.sample(rng) as u32;
        let mut within = Count::ZERO;
        for i in 0..fin.len(v) {
            if self.shape_of_bits.get(&((fin.key_at(v, i) >> 16) as u32)) == Some(&j) {
                within += fin.count_at(v, i);
            }
        }
        let mut x = count::random_below(rng, &within);
        for i in 0..fin.len(v) {
            let key = fin.key_at(v, i);
            if self.shape_of_bits.get(&((key >> 16) as u32)) != Some(&j) {
                continue;
            }
            let c = fin.count_at(v, i);
            if x < c {
                return self.expand_root(st, rng, v, ColoredTreelet::from_key(key), j);
            }
            x -= c;
        }
        unreachable!("draw lies within the shape weight")
    }

    /// Uncolored star drawn uniformly.
    pub fn sample_star<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<Vec<u32>> {
        match &self.star {
            Some(s) => Ok(s.sample(self.graph, rng)),
            None => StarSampler::new(self.graph, self.k).map(|s| s.sample(self.graph, rng)),
        }
    }

    /// Node colors, read back from the singleton round.
    pub fn node_colors(&self) -> Result<Vec<u8>> {
        let round = self.tables.round(1).ok_or_else(|| Error::invalid("tables lack round 1"))?;
        (0..self.graph.node_count() as u32)
            .map(|v| {
                let e = round.entries(v)?;
                match e.as_slice() {
                    [(t, _)] => Ok(t.colors().trailing_zeros() as u8),
                    _ => Err(Error::invalid(format!("node {v} has {} singleton records", e.len()))),
                }
            })
            .collect()
    }

    /// Colorful star sampler under the table's coloring; `None` if there are no colorful stars.
    pub fn colorful_stars(&self) -> Result<Option<&ColorfulStarSampler>> {
        if let Some(s) = self.colorful_star.get() {
            return Ok(s.as_ref());
        }
        let built = match ColorfulStarSampler::new(self.graph, &self.node_colors()?, self.k) {
            Ok(s) => Some(s),
            Err(Error::NoneExist(_)) => None,
            Err(e) => return Err(e),
        };
        Ok(self.colorful_star.get_or_init(|| built).as_ref())
    }

    /// A node set spanning a graphlet: from the star branch with probability
    /// `p S / (p S + t)` when round-skipped, from the table otherwise. `p` is
    /// the colorful probability of a `k`-set under the table's coloring.
    pub fn sample_uniform_graphlet<R: Rng + ?Sized>(&self, st: &mut SamplerState, rng: &mut R) -> Result<GraphletSample> {
        if self.star_probability > 0.0 && self.star.is_some() && rng.gen_bool(self.star_probability.min(1.0)) {
            return Ok(GraphletSample {
                nodes: self.sample_star(rng)?,
                source: Source::Star,
            });
        }
        match self.sample_treelet_copy(st, rng) {
            Ok(c) => Ok(GraphletSample {
                nodes: c.nodes,
                source: Source::Treelet,
            }),
            Err(Error::NoneExist(_)) if self.star.is_some() => Ok(GraphletSample {
                nodes: self.sample_star(rng)?,
                source: Source::Star,
            }),
            Err(Error::NoneExist(_)) => Err(Error::NoneExist("no k-graphlets to sample".into())),
            Err(e) => Err(e),
        }
    }

    fn expand_root<R: Rng + ?Sized>(
        &self,
        st: &mut SamplerState,
        rng: &mut R,
        v: u32,
        t: ColoredTreelet,
        shape: usize,
    ) -> Result<TreeletCopy> {
        let mut nodes = vec![v];
        let mut edges = Vec::with_capacity(self.k - 1);
        self.expand(st, rng, t, v, &mut nodes, &mut edges)?;
        Ok(TreeletCopy {
            root: v,
            treelet: t,
            shape,
            nodes,
            edges,
        })
    }

    /// Draws one copy of `t` rooted at `v` uniformly, appending all nodes but `v`.
    fn expand<R: Rng + ?Sized>(
        &self,
        st: &mut SamplerState,
        rng: &mut R,
        t: ColoredTreelet,
        v: u32,
        nodes: &mut Vec<u32>,
        edges: &mut Vec<(u32, u32)>,
    ) -> Result<()> {
        if t.size() == 1 {
            return Ok(());
        }
        let (left, right, beta) = match self.split_for(&t) {
            Some(s) => (s.left, s.right, s.beta),
            None => {
                let (child, rest) = t.shape().split_first().expect("non-singleton");
                (rest, child, t.beta())
            }
        };
        let colors = t.colors();
        // c(left_{C∖C''}, v) indexed by C''
        let mut own: Vec<(u16, Count)> = Vec::new();
        self.view(left.size())?.for_shape(v, &left, |c, n| {
            if c & !colors == 0 {
                own.push((colors & !c, n));
            }
            true
        });
        own.sort_unstable_by_key(|e| e.0);
        let here = self.view(t.size())?.count(v, t.key());
        let total = count::mul(here, Count::from(beta))?;
        if total.is_zero() {
            return Err(Error::invalid(format!("internal: treelet {t:?} absent at node {v}")));
        }
        let rview = self.view(right.size())?;
        let sweep = |targets: &[Count], out: &mut Vec<(u32, u16)>| {
            let mut acc = Count::ZERO;
            let mut ti = 0;
            'outer: for &u in self.graph.neighbors(v) {
                let mut done = false;
                rview.for_shape(u, &right, |c2, n| {
                    if c2 & !colors != 0 {
                        return true;
                    }
                    let Ok(p) = own.binary_search_by_key(&c2, |e| e.0) else {
                        return true;
                    };
                    acc += own[p].1 * n;
                    while ti < targets.len() && targets[ti] < acc {
                        out.push((u, c2));
                        ti += 1;
                    }
                    if ti == targets.len() {
                        done = true;
                        return false;
                    }
                    true
                });
                if done {
                    break 'outer;
                }
            }
        };
        let (u, c2) = if self.graph.degree(v) >= st.config.delta0 {
            let size = st.config.size;
            st.buffer.next(v, t.key(), &total, size, rng, sweep)
        } else {
            let y = count::random_below(rng, &total);
            let mut out = Vec::with_capacity(1);
            sweep(&[y], &mut out);
            *out.first().ok_or_else(|| Error::invalid("internal: weighted sweep fell short"))?
        };
        nodes.push(u);
        edges.push((v, u));
        self.expand(st, rng, ColoredTreelet::new(left, colors & !c2)?, v, nodes, edges)?;
        self.expand(st, rng, ColoredTreelet::new(right, c2)?, u, nodes, edges)?;
        Ok(())
    }
}
