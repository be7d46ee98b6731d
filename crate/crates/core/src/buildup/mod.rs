//! Color-coding build-up: colorful rooted treelet counts computed round by
//! round and persisted as one count table per round.

use std::fs;
use std::path::{Path, PathBuf};
use std::sync::{Arc, Mutex};
use std::time::{Duration, Instant};

use rayon::prelude::*;

use crate::count::{self, Count};
use crate::error::{Error, Result};
use crate::graph::ColoredGraph;
use crate::treelet::{ColoredTreelet, ShapeCatalog, TreeletIndexTables};

pub(crate) mod dp;
pub mod table;
pub mod vlc;

pub use dp::{Algebra, MemRound, RoundSource};
pub use table::{CountTable, ShapeTotal, TableHeader};

use dp::{DpContext, SplitIndex};
use table::SpillWriter;

const CHUNK: usize = 512;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct BuildOptions {
    /// Variable-length counts; needs `k <= 8`.
    pub vlc: bool,
    /// Skip round `k-1` and count non-star shapes at their balanced rooting.
    pub skip_round: bool,
    /// Store size-`k` entries only at color-0 nodes. Ignored when `skip_round` is set.
    pub zero_root: bool,
    /// Worker threads; 0 uses every core.
    pub threads: usize,
}

impl BuildOptions {
    /// VLC and round skipping on the `k <= 8` path (skipping from `k = 4`),
    /// fixed width with zero-rooting otherwise.
    pub fn for_k(k: usize) -> BuildOptions {
        let skip = (4..=8).contains(&k);
        BuildOptions {
            vlc: k <= 8,
            skip_round: skip,
            zero_root: !skip,
            threads: 0,
        }
    }

    fn validate(&self, k: usize) -> Result<()> {
        crate::graph::check_k(k)?;
        if self.vlc && k > 8 {
            return Err(Error::invalid("variable-length counts need k <= 8"));
        }
        Ok(())
    }

    fn zero_root_effective(&self) -> bool {
        self.zero_root && !self.skip_round
    }
}

/// File name of round `h`.
pub fn round_path(dir: &Path, h: usize) -> PathBuf {
    dir.join(format!("round_{h:02}.mct"))
}

/// Rounds materialized for `k` under `opts`.
pub fn rounds_for(k: usize, skip_round: bool) -> Vec<usize> {
    (1..=k).filter(|&h| !(skip_round && h == k - 1)).collect()
}

fn algebra_for(k: usize, ite: Option<&Arc<TreeletIndexTables>>) -> Algebra {
    match ite {
        Some(t) if k <= 8 => Algebra::Ite(Arc::clone(t)),
        _ => Algebra::Plain,
    }
}

/// What a node computes in a given round.
#[derive(Clone, Copy, PartialEq, Eq)]
enum Step {
    Singleton,
    Canonical,
    CanonicalZeroRooted,
    Balanced,
}

fn step_for(h: usize, k: usize, opts: &BuildOptions) -> Step {
    if h == 1 {
        Step::Singleton
    } else if h == k && opts.skip_round {
        Step::Balanced
    } else if h == k && opts.zero_root_effective() {
        Step::CanonicalZeroRooted
    } else {
        Step::Canonical
    }
}

fn node_record(ctx: &DpContext<'_>, v: u32, h: usize, k: usize, step: Step, splits: Option<&SplitIndex>) -> Result<Vec<(u64, Count)>> {
    match step {
        Step::Singleton => Ok(ctx.singleton_record(v)),
        Step::Canonical => ctx.canonical(v, h),
        Step::CanonicalZeroRooted => {
            if ctx.colors[v as usize] == 0 {
                ctx.canonical(v, h)
            } else {
                Ok(Vec::new())
            }
        }
        Step::Balanced => ctx.balanced(v, k, splits.expect("split index for the balanced round")),
    }
}

/// Adds the final-round entries of one record into per-shape raw sums.
fn tally(record: &[(u64, Count)], alg: &Algebra, catalog: &ShapeCatalog, raw: &mut [Count]) -> Result<()> {
    for &(id, c) in record {
        let shape = alg.treelet(id).shape();
        let j = catalog
            .free_id(&shape)
            .ok_or_else(|| Error::invalid("internal: final entry of the wrong size"))?;
        raw[j] = count::add(raw[j], c)?;
    }
    Ok(())
}

/// Per-copy totals from raw rooted sums.
fn shape_totals(raw: &[Count], k: usize, opts: &BuildOptions, catalog: &ShapeCatalog) -> Result<(Vec<ShapeTotal>, Count)> {
    let mut out = Vec::with_capacity(raw.len());
    let mut total = Count::ZERO;
    for (j, shape) in catalog.free_shapes().iter().enumerate() {
        let mult = if opts.skip_round {
            catalog.balanced_roots(j)
        } else if opts.zero_root_effective() {
            1
        } else {
            k as u32
        };
        let t = if mult == 0 {
            Count::ZERO
        } else {
            let m = Count::from(mult);
            if !(raw[j] % m).is_zero() {
                return Err(Error::invalid(format!("internal: raw total of shape {j} not divisible by {mult}")));
            }
            raw[j] / m
        };
        total = count::add(total, t)?;
        out.push(ShapeTotal {
            shape: *shape,
            total: t,
            multiplicity: mult,
        });
    }
    Ok((out, total))
}

fn star_total(g: &ColoredGraph, k: usize) -> Result<Count> {
    let mut s = Count::ZERO;
    for v in 0..g.graph().node_count() as u32 {
        let d = g.graph().degree(v) as u64;
        if d + 1 >= k as u64 {
            s = count::add(s, count::binomial(d, k as u64 - 1)?)?;
        }
    }
    Ok(s)
}

fn header_for(g: &ColoredGraph, h: usize, opts: &BuildOptions) -> TableHeader {
    TableHeader {
        k: g.k(),
        h,
        n: g.graph().node_count(),
        vlc: opts.vlc,
        zero_rooted: h == g.k() && opts.zero_root_effective(),
        round_skipped: opts.skip_round,
        lambda: g.lambda(),
        total: Count::ZERO,
        shapes: Vec::new(),
        star_total: Count::ZERO,
    }
}

/// The tables of one build, opened for reading.
#[derive(Debug)]
pub struct TableSet {
    dir: PathBuf,
    k: usize,
    rounds: Vec<Option<CountTable>>,
    ite: Option<Arc<TreeletIndexTables>>,
    catalog: Arc<ShapeCatalog>,
}

impl TableSet {
    /// Opens every round table in `dir`; the largest round present is `k`.
    pub fn open(dir: &Path) -> Result<TableSet> {
        let mut found = Vec::new();
        for h in 1..=crate::graph::MAX_K {
            if round_path(dir, h).exists() {
                found.push(h);
            }
        }
        let k = *found
            .last()
            .ok_or_else(|| Error::format(dir, "no round tables found"))?;
        let ite = if k <= 8 {
            Some(Arc::new(TreeletIndexTables::load_or_build(&dir.join(format!("ite{k}.bin")), k)?))
        } else {
            None
        };
        let mut rounds: Vec<Option<CountTable>> = (0..=k).map(|_| None).collect();
        for h in found {
            let t = CountTable::open(&round_path(dir, h), ite.clone())?;
            if t.header().h != h || t.header().k != k {
                return Err(Error::format(round_path(dir, h), "round header does not match file name"));
            }
            rounds[h] = Some(t);
        }
        let set = TableSet {
            dir: dir.to_path_buf(),
            k,
            rounds,
            ite,
            catalog: Arc::new(ShapeCatalog::new(k)),
        };
        let expect = rounds_for(k, set.final_table().header().round_skipped);
        for h in expect {
            if set.rounds[h].is_none() {
                return Err(Error::format(dir, format!("round {h} is missing")));
            }
        }
        Ok(set)
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn round(&self, h: usize) -> Option<&CountTable> {
        self.rounds.get(h).and_then(|r| r.as_ref())
    }

    pub fn final_table(&self) -> &CountTable {
        self.rounds[self.k].as_ref().expect("final round present")
    }

    pub fn header(&self) -> &TableHeader {
        self.final_table().header()
    }

    pub fn node_count(&self) -> usize {
        self.header().n
    }

    pub fn total(&self) -> Count {
        self.header().total
    }

    pub fn star_total(&self) -> Count {
        self.header().star_total
    }

    pub fn shape_totals(&self) -> &[ShapeTotal] {
        &self.header().shapes
    }

    pub fn round_skipped(&self) -> bool {
        self.header().round_skipped
    }

    pub fn zero_rooted(&self) -> bool {
        self.header().zero_rooted
    }

    pub fn lambda(&self) -> Option<f64> {
        self.header().lambda
    }

    pub fn catalog(&self) -> &Arc<ShapeCatalog> {
        &self.catalog
    }

    pub fn index_tables(&self) -> Option<&Arc<TreeletIndexTables>> {
        self.ite.as_ref()
    }

    /// Identifier space shared by the recurrence and the samplers.
    pub fn algebra(&self) -> Algebra {
        algebra_for(self.k, self.ite.as_ref())
    }

    /// η_v of the final round.
    pub fn occ_total(&self, v: u32) -> Result<Count> {
        self.final_table().occ_total(v)
    }

    /// c(t, v) from the round of size `|t|`; zero when that round was skipped.
    pub fn occ(&self, t: &ColoredTreelet, v: u32) -> Result<Count> {
        match self.round(t.size()) {
            Some(r) => r.occ(t, v),
            None => Ok(Count::ZERO),
        }
    }
}

/// Builds every round of `g` into `dir` (created if needed) and opens the result.
pub fn build(g: &ColoredGraph, opts: &BuildOptions, dir: &Path) -> Result<TableSet> {
    build_with_progress(g, opts, dir, |_, _| {})
}

/// As [`build`], calling `progress(round, elapsed)` after each round.
pub fn build_with_progress(
    g: &ColoredGraph,
    opts: &BuildOptions,
    dir: &Path,
    mut progress: impl FnMut(usize, Duration),
) -> Result<TableSet> {
    let k = g.k();
    opts.validate(k)?;
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    for h in 1..=crate::graph::MAX_K {
        let p = round_path(dir, h);
        if p.exists() {
            fs::remove_file(&p).map_err(|e| Error::io(&p, e))?;
        }
    }
    let ite = if k <= 8 {
        Some(Arc::new(TreeletIndexTables::load_or_build(&dir.join(format!("ite{k}.bin")), k)?))
    } else {
        None
    };
    let alg = algebra_for(k, ite.as_ref());
    let catalog = ShapeCatalog::new(k);
    let splits = if opts.skip_round {
        Some(SplitIndex::new(&catalog, &alg)?)
    } else {
        None
    };
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(opts.threads)
        .build()
        .map_err(|e| Error::invalid(format!("thread pool: {e}")))?;
    let n = g.graph().node_count();
    let mut done: Vec<Option<CountTable>> = (0..=k).map(|_| None).collect();
    for h in rounds_for(k, opts.skip_round) {
        let start = Instant::now();
        let step = step_for(h, k, opts);
        let mut header = header_for(g, h, opts);
        let ctx = DpContext {
            graph: g.graph(),
            colors: g.colors(),
            alg: &alg,
            rounds: done.iter().map(|r| r.as_ref().map(|t| t as &dyn RoundSource)).collect(),
        };
        let spill_path = dir.join(format!("round_{h:02}.spill"));
        let spill = Mutex::new(SpillWriter::create(&spill_path)?);
        let shapes = if h == k { catalog.len() } else { 0 };
        let raw = pool.install(|| {
            (0..n.div_ceil(CHUNK))
                .into_par_iter()
                .map(|ci| -> Result<Vec<Count>> {
                    let mut raw = vec![Count::ZERO; shapes];
                    let mut buf = Vec::new();
                    let mut spans = Vec::with_capacity(CHUNK);
                    let mut stored = Vec::new();
                    for v in ci * CHUNK..((ci + 1) * CHUNK).min(n) {
                        let rec = node_record(&ctx, v as u32, h, k, step, splits.as_ref())?;
                        if h == k {
                            tally(&rec, &alg, &catalog, &mut raw)?;
                        }
                        let a = buf.len();
                        if opts.vlc {
                            table::encode_record(&rec, true, &mut buf)?;
                        } else {
                            stored.clear();
                            stored.extend(rec.iter().map(|&(id, c)| (alg.key(id), c)));
                            table::encode_record(&stored, false, &mut buf)?;
                        }
                        spans.push((v as u32, a, buf.len()));
                    }
                    let mut w = spill.lock().expect("spill writer lock");
                    for (v, a, b) in spans {
                        w.append(v, &buf[a..b])?;
                    }
                    Ok(raw)
                })
                .try_reduce(
                    || vec![Count::ZERO; shapes],
                    |mut a, b| {
                        for (x, y) in a.iter_mut().zip(b) {
                            *x = count::add(*x, y)?;
                        }
                        Ok(a)
                    },
                )
        })?;
        if h == k {
            let (totals, t) = shape_totals(&raw, k, opts, &catalog)?;
            header.shapes = totals;
            header.total = t;
            if opts.skip_round {
                header.star_total = star_total(g, k)?;
            }
        }
        drop(ctx);
        let spill = spill.into_inner().expect("spill writer lock");
        let dest = round_path(dir, h);
        spill.flush_and_sort(&header, &dest)?;
        done[h] = Some(CountTable::open(&dest, ite.clone())?);
        progress(h, start.elapsed());
    }
    TableSet::open(dir)
}

/// Result of an in-memory build; same semantics as the on-disk tables.
#[derive(Clone, Debug)]
pub struct MemoryTables {
    k: usize,
    alg: Algebra,
    rounds: Vec<Option<MemRound>>,
    shapes: Vec<ShapeTotal>,
    total: Count,
    star_total: Count,
}

impl std::fmt::Debug for Algebra {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Algebra::Ite(_) => f.write_str("Algebra::Ite"),
            Algebra::Plain => f.write_str("Algebra::Plain"),
        }
    }
}

impl MemoryTables {
    pub fn k(&self) -> usize {
        self.k
    }

    pub fn shape_totals(&self) -> &[ShapeTotal] {
        &self.shapes
    }

    pub fn total(&self) -> Count {
        self.total
    }

    pub fn star_total(&self) -> Count {
        self.star_total
    }

    /// Raw entries of round `h` at `v`; empty for a skipped round.
    pub fn entries(&self, h: usize, v: u32) -> Vec<(ColoredTreelet, Count)> {
        match self.rounds.get(h).and_then(|r| r.as_ref()) {
            Some(r) => r.record(v).iter().map(|&(id, c)| (self.alg.treelet(id), c)).collect(),
            None => Vec::new(),
        }
    }
}

/// Single-threaded build held entirely in memory (`vlc` is ignored).
pub fn build_in_memory(g: &ColoredGraph, opts: &BuildOptions, ite: Option<&Arc<TreeletIndexTables>>) -> Result<MemoryTables> {
    let k = g.k();
    crate::graph::check_k(k)?;
    let alg = algebra_for(k, ite);
    let catalog = ShapeCatalog::new(k);
    let splits = if opts.skip_round {
        Some(SplitIndex::new(&catalog, &alg)?)
    } else {
        None
    };
    build_memory_with(g, opts, &alg, &catalog, splits.as_ref())
}

pub(crate) fn build_memory_with(
    g: &ColoredGraph,
    opts: &BuildOptions,
    alg: &Algebra,
    catalog: &ShapeCatalog,
    splits: Option<&SplitIndex>,
) -> Result<MemoryTables> {
    let k = g.k();
    let n = g.graph().node_count();
    let mut rounds: Vec<Option<MemRound>> = (0..=k).map(|_| None).collect();
    let mut raw = vec![Count::ZERO; catalog.len()];
    for h in rounds_for(k, opts.skip_round) {
        let step = step_for(h, k, opts);
        let ctx = DpContext {
            graph: g.graph(),
            colors: g.colors(),
            alg,
            rounds: rounds.iter().map(|r| r.as_ref().map(|t| t as &dyn RoundSource)).collect(),
        };
        let mut round = MemRound::new();
        for v in 0..n as u32 {
            let rec = node_record(&ctx, v, h, k, step, splits)?;
            if h == k {
                tally(&rec, alg, catalog, &mut raw)?;
            }
            round.push(&rec);
        }
        drop(ctx);
        rounds[h] = Some(round);
    }
    let (shapes, total) = shape_totals(&raw, k, opts, catalog)?;
    let star_total = if opts.skip_round { star_total(g, k)? } else { Count::ZERO };
    Ok(MemoryTables {
        k,
        alg: alg.clone(),
        rounds,
        shapes,
        total,
        star_total,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::Graph;
    use crate::treelet::TreeletShape;

    fn triangle() -> ColoredGraph {
        let g = Graph::from_edges(3, &[(0, 1), (1, 2), (0, 2)]).unwrap();
        ColoredGraph::with_colors(Arc::new(g), 3, vec![0, 1, 2]).unwrap()
    }

    #[test]
    fn triangle_zero_rooted() {
        let dir = tempfile::tempdir().unwrap();
        let opts = BuildOptions::for_k(3);
        assert!(opts.zero_root && !opts.skip_round);
        let set = build(&triangle(), &opts, dir.path()).unwrap();
        let center = ColoredTreelet::new(TreeletShape::new(3, 0b1010).unwrap(), 0b111).unwrap();
        let end = ColoredTreelet::new(TreeletShape::new(3, 0b1100).unwrap(), 0b111).unwrap();
        assert_eq!(set.occ(&center, 0).unwrap(), Count::from(1u64));
        assert_eq!(set.occ(&end, 0).unwrap(), Count::from(2u64));
        assert_eq!(set.occ_total(0).unwrap(), Count::from(3u64));
        assert_eq!(set.occ_total(1).unwrap(), Count::ZERO);
        assert_eq!(set.total(), Count::from(3u64));
        assert_eq!(fs::read_dir(dir.path()).unwrap().filter(|e| e.as_ref().unwrap().path().extension().is_some_and(|x| x == "mct")).count(), 3);
    }

    #[test]
    fn star_total_with_round_skipping() {
        let edges: Vec<(u32, u32)> = (1..=5).map(|i| (0, i)).collect();
        let g = Graph::from_edges(6, &edges).unwrap();
        let cg = ColoredGraph::with_colors(Arc::new(g), 3, vec![0, 1, 2, 1, 2, 1]).unwrap();
        let opts = BuildOptions {
            vlc: true,
            skip_round: true,
            zero_root: false,
            threads: 1,
        };
        let dir = tempfile::tempdir().unwrap();
        let set = build(&cg, &opts, dir.path()).unwrap();
        assert_eq!(set.star_total(), Count::from(10u64));
        assert_eq!(set.total(), Count::ZERO);
        assert!(set.round(2).is_none());
        for v in 0..6 {
            assert!(set.final_table().entries(v).unwrap().is_empty());
        }
    }

    #[test]
    fn repeated_color_contributes_nothing() {
        let g = Graph::from_edges(3, &[(0, 1), (1, 2)]).unwrap();
        let cg = ColoredGraph::with_colors(Arc::new(g), 3, vec![0, 1, 0]).unwrap();
        let mem = build_in_memory(&cg, &BuildOptions::for_k(3), None).unwrap();
        assert_eq!(mem.total(), Count::ZERO);
    }

    #[test]
    fn thread_count_does_not_change_bytes() {
        let g = crate::graph::Graph::from_edges(
            40,
            &(0..40u32).flat_map(|i| [(i, (i + 1) % 40), (i, (i * 7 + 3) % 40)]).collect::<Vec<_>>(),
        )
        .unwrap();
        let cg = ColoredGraph::uniform(Arc::new(g), 5, 9).unwrap();
        let mut files = Vec::new();
        for threads in [1, 3] {
            let dir = tempfile::tempdir().unwrap();
            let opts = BuildOptions {
                threads,
                ..BuildOptions::for_k(5)
            };
            build(&cg, &opts, dir.path()).unwrap();
            files.push((1..=5).filter_map(|h| fs::read(round_path(dir.path(), h)).ok()).collect::<Vec<_>>());
        }
        assert_eq!(files[0], files[1]);
    }

    fn random_graph(n: u32, m: usize, seed: u64) -> Graph {
        use rand::Rng;
        let mut rng = crate::rng::stream(seed, 99);
        let edges: Vec<(u32, u32)> = (0..m).map(|_| (rng.gen_range(0..n), rng.gen_range(0..n))).collect();
        Graph::from_edges(n as usize, &edges).unwrap()
    }

    #[test]
    fn matches_oracle_in_every_mode() {
        for (i, k) in [3usize, 4, 5].into_iter().enumerate() {
            let g = Arc::new(random_graph(14, 30, i as u64));
            let cg = ColoredGraph::uniform(g, k, 7 + i as u64).unwrap();
            let truth = crate::oracle::exact_colorful_treelets(&cg, k).unwrap();
            for (skip, zero, vlc) in [(false, false, false), (false, true, true), (true, false, true), (true, false, false)] {
                let opts = BuildOptions { vlc, skip_round: skip, zero_root: zero, threads: 2 };
                let dir = tempfile::tempdir().unwrap();
                let set = build(&cg, &opts, dir.path()).unwrap();
                for h in 1..k {
                    let Some(r) = set.round(h) else { continue };
                    for v in 0..14 {
                        let got: Vec<_> = r.entries(v).unwrap().into_iter().map(|(t, c)| (t, u64::try_from(c).unwrap())).collect();
                        assert_eq!(got, truth.entries(h, v), "k={k} h={h} v={v}");
                    }
                }
                if !skip {
                    for v in 0..14 {
                        let got: Vec<_> = set.final_table().entries(v).unwrap().into_iter().map(|(t, c)| (t, u64::try_from(c).unwrap())).collect();
                        let want = if zero && cg.color(v) != 0 { Vec::new() } else { truth.entries(k, v) };
                        assert_eq!(got, want, "k={k} final v={v}");
                    }
                }
                let star = set.catalog().star();
                for (j, st) in set.shape_totals().iter().enumerate() {
                    if skip && j == star {
                        continue;
                    }
                    assert_eq!(u64::try_from(st.total).unwrap(), truth.shape_totals[j], "k={k} j={j} {opts:?}");
                }
                let mem = build_in_memory(&cg, &opts, set.index_tables()).unwrap();
                assert_eq!(mem.shape_totals(), set.shape_totals());
            }
        }
    }
}
