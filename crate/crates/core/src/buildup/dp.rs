//! Per-node evaluation of the treelet recurrence
//! c(T_C, v) = (1/β_T) Σ_{u~v} Σ_{C''⊂C} c(T'_{C∖C''}, v) · c(T''_{C''}, u).

use std::collections::HashMap;
use std::sync::Arc;

use rayon::prelude::*;

use super::table::CountTable;
use crate::count::{self, Count};
use crate::error::{Error, Result};
use crate::graph::Graph;
use crate::treelet::{ColoredTreelet, ShapeCatalog, TreeletIndexTables, TreeletShape};

/// Neighborhoods at least this large are aggregated in parallel.
const PARALLEL_DEGREE: usize = 1 << 14;

/// Treelet identifiers used inside the recurrence: ITE indices when the
/// lookup tables exist (`k <= 8`), packed treelet keys otherwise.
#[derive(Clone)]
pub enum Algebra {
    Ite(Arc<TreeletIndexTables>),
    Plain,
}

impl Algebra {
    #[inline]
    pub fn singleton(&self, color: u8) -> u64 {
        let t = ColoredTreelet::singleton(color);
        self.id_of(&t).expect("singletons are always encodable")
    }

    #[inline]
    pub fn id_of(&self, t: &ColoredTreelet) -> Option<u64> {
        match self {
            Algebra::Ite(ite) => ite.to_code(t).map(u64::from),
            Algebra::Plain => Some(t.key()),
        }
    }

    #[inline]
    pub fn id_of_key(&self, key: u64) -> Option<u64> {
        match self {
            Algebra::Ite(ite) => ite.code_of_key(key).map(u64::from),
            Algebra::Plain => Some(key),
        }
    }

    #[inline]
    pub fn treelet(&self, id: u64) -> ColoredTreelet {
        match self {
            Algebra::Ite(ite) => ite.from_code(id as u16).expect("valid index"),
            Algebra::Plain => ColoredTreelet::from_key(id),
        }
    }

    #[inline]
    pub fn key(&self, id: u64) -> u64 {
        match self {
            Algebra::Ite(_) => self.treelet(id).key(),
            Algebra::Plain => id,
        }
    }

    #[inline]
    pub fn colors(&self, id: u64) -> u16 {
        match self {
            Algebra::Ite(ite) => ite.skeleton(id as u16).1,
            Algebra::Plain => id as u16,
        }
    }

    #[inline]
    fn merge(&self, a: u64, b: u64) -> Option<u64> {
        match self {
            Algebra::Ite(ite) => {
                let m = ite.merge(a as u16, b as u16);
                (m != crate::treelet::ite::ITE_FAIL).then_some(m as u64)
            }
            Algebra::Plain => {
                if a as u16 & b as u16 != 0 {
                    return None;
                }
                let t = ColoredTreelet::from_key(a).merge(&ColoredTreelet::from_key(b)).ok()??;
                Some(t.key())
            }
        }
    }

    #[inline]
    fn beta(&self, id: u64) -> u32 {
        match self {
            Algebra::Ite(ite) => ite.beta(id as u16) as u32,
            Algebra::Plain => ColoredTreelet::from_key(id).beta(),
        }
    }
}

/// Read access to a finished round, returning raw counts keyed by [`Algebra`] ids.
pub trait RoundSource: Sync {
    fn append_entries(&self, v: u32, alg: &Algebra, out: &mut Vec<(u64, Count)>) -> Result<()>;
}

impl RoundSource for CountTable {
    fn append_entries(&self, v: u32, alg: &Algebra, out: &mut Vec<(u64, Count)>) -> Result<()> {
        let direct = self.is_vlc() || matches!(alg, Algebra::Plain);
        let mut missing = false;
        self.for_each_raw(v, |id, c| {
            if direct {
                out.push((id, c));
            } else {
                match alg.id_of_key(id) {
                    Some(i) => out.push((i, c)),
                    None => missing = true,
                }
            }
        })?;
        if missing {
            return Err(Error::format(self.path(), "unknown treelet key"));
        }
        Ok(())
    }
}

/// A finished round held in memory.
#[derive(Clone, Debug, Default)]
pub struct MemRound {
    pub(crate) offsets: Vec<usize>,
    pub(crate) entries: Vec<(u64, Count)>,
}

impl MemRound {
    pub(crate) fn new() -> MemRound {
        MemRound {
            offsets: vec![0],
            entries: Vec::new(),
        }
    }

    pub(crate) fn push(&mut self, record: &[(u64, Count)]) {
        self.entries.extend_from_slice(record);
        self.offsets.push(self.entries.len());
    }

    pub(crate) fn record(&self, v: u32) -> &[(u64, Count)] {
        &self.entries[self.offsets[v as usize]..self.offsets[v as usize + 1]]
    }
}

impl RoundSource for MemRound {
    fn append_entries(&self, v: u32, _alg: &Algebra, out: &mut Vec<(u64, Count)>) -> Result<()> {
        out.extend_from_slice(self.record(v));
        Ok(())
    }
}

/// Balanced final-round lookup: `(left, right)` shape pair to the shape id,
/// β and the id of the representative with the full colorset.
pub(crate) struct SplitIndex {
    by_halves: HashMap<(TreeletShape, TreeletShape), (usize, u32, u64)>,
}

impl SplitIndex {
    pub(crate) fn new(catalog: &ShapeCatalog, alg: &Algebra) -> Result<SplitIndex> {
        let k = catalog.k();
        let full = ((1u32 << k) - 1) as u16;
        let mut by_halves = HashMap::new();
        for j in 0..catalog.len() {
            if let Some(split) = catalog.balanced(j) {
                let rep = ColoredTreelet::new(split.rep, full)?;
                let id = alg.id_of(&rep).ok_or_else(|| Error::invalid("representative not encodable"))?;
                by_halves.insert((split.left, split.right), (j, split.beta, id));
            }
        }
        Ok(SplitIndex { by_halves })
    }
}

pub(crate) struct DpContext<'a> {
    pub graph: &'a Graph,
    pub colors: &'a [u8],
    pub alg: &'a Algebra,
    /// `rounds[h]` holds the finished round `h`; index 0 is unused.
    pub rounds: Vec<Option<&'a dyn RoundSource>>,
}

impl DpContext<'_> {
    fn round(&self, h: usize) -> Result<&dyn RoundSource> {
        self.rounds
            .get(h)
            .copied()
            .flatten()
            .ok_or_else(|| Error::invalid(format!("round {h} is not available")))
    }

    fn own(&self, v: u32, h: usize) -> Result<Vec<(u64, Count)>> {
        let mut out = Vec::new();
        self.round(h)?.append_entries(v, self.alg, &mut out)?;
        Ok(out)
    }

    /// Σ over neighbors u of the size-`h` entries of u, keyed by id.
    fn aggregate(&self, v: u32, h: usize) -> Result<Vec<(u64, Count)>> {
        let src = self.round(h)?;
        let nbrs = self.graph.neighbors(v);
        let fold = |chunk: &[u32]| -> Result<HashMap<u64, Count>> {
            let mut acc: HashMap<u64, Count> = HashMap::new();
            let mut buf = Vec::new();
            for &u in chunk {
                buf.clear();
                src.append_entries(u, self.alg, &mut buf)?;
                for &(id, c) in &buf {
                    let slot = acc.entry(id).or_insert(Count::ZERO);
                    *slot = count::add(*slot, c)?;
                }
            }
            Ok(acc)
        };
        let acc = if nbrs.len() >= PARALLEL_DEGREE {
            nbrs.par_chunks(4096).map(fold).try_reduce(HashMap::new, |mut a, b| {
                for (id, c) in b {
                    let slot = a.entry(id).or_insert(Count::ZERO);
                    *slot = count::add(*slot, c)?;
                }
                Ok(a)
            })?
        } else {
            fold(nbrs)?
        };
        let mut out: Vec<(u64, Count)> = acc.into_iter().collect();
        out.sort_unstable_by_key(|e| e.0);
        Ok(out)
    }

    pub fn singleton_record(&self, v: u32) -> Vec<(u64, Count)> {
        vec![(self.alg.singleton(self.colors[v as usize]), Count::from(1u64))]
    }

    /// Round `h >= 2` at `v` through canonical decompositions.
    pub fn canonical(&self, v: u32, h: usize) -> Result<Vec<(u64, Count)>> {
        let mut acc: HashMap<u64, Count> = HashMap::new();
        for h1 in 1..h {
            let own = self.own(v, h1)?;
            if own.is_empty() {
                continue;
            }
            let agg = self.aggregate(v, h - h1)?;
            for &(a, ca) in &own {
                let colors_a = self.alg.colors(a);
                for &(b, cb) in &agg {
                    if colors_a & self.alg.colors(b) != 0 {
                        continue;
                    }
                    if let Some(t) = self.alg.merge(a, b) {
                        let slot = acc.entry(t).or_insert(Count::ZERO);
                        *slot = count::add(*slot, count::mul(ca, cb)?)?;
                    }
                }
            }
        }
        let mut out = Vec::with_capacity(acc.len());
        for (id, s) in acc {
            let beta = Count::from(self.alg.beta(id));
            if !(s % beta).is_zero() {
                return Err(Error::invalid(format!("internal: sum not divisible by beta at node {v}")));
            }
            out.push((id, s / beta));
        }
        out.sort_unstable_by_key(|e| e.0);
        Ok(out)
    }

    /// Final round at `v` through balanced decompositions, combining rounds `<= k-2`.
    /// Entries are `(representative id, count)`; stars are absent.
    pub fn balanced(&self, v: u32, k: usize, splits: &SplitIndex) -> Result<Vec<(u64, Count)>> {
        let mut acc: HashMap<u64, (Count, u32)> = HashMap::new();
        for h1 in 2..=k.saturating_sub(2) {
            let own = self.own(v, h1)?;
            if own.is_empty() {
                continue;
            }
            let agg = self.aggregate(v, k - h1)?;
            let agg_shapes: Vec<TreeletShape> = agg.iter().map(|e| self.alg.treelet(e.0).shape()).collect();
            for &(a, ca) in &own {
                let ta = self.alg.treelet(a);
                for (&(b, cb), sb) in agg.iter().zip(&agg_shapes) {
                    if ta.colors() & self.alg.colors(b) != 0 {
                        continue;
                    }
                    if let Some(&(_, beta, rep)) = splits.by_halves.get(&(ta.shape(), *sb)) {
                        let slot = acc.entry(rep).or_insert((Count::ZERO, beta));
                        slot.0 = count::add(slot.0, count::mul(ca, cb)?)?;
                    }
                }
            }
        }
        let mut out = Vec::with_capacity(acc.len());
        for (id, (s, beta)) in acc {
            let beta = Count::from(beta);
            if !(s % beta).is_zero() {
                return Err(Error::invalid(format!("internal: sum not divisible by beta at node {v}")));
            }
            out.push((id, s / beta));
        }
        out.sort_unstable_by_key(|e| e.0);
        Ok(out)
    }
}
