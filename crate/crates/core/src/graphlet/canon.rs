//! Canonical labeling of graphs on at most 16 nodes by equitable partition
//! refinement and individualization, keeping the lexicographically largest
//! packed adjacency over the leaves of the search tree. Twin classes and
//! automorphisms found at equal leaves prune the search.

use super::SmallGraph;

type Cells = Vec<u16>;

#[inline]
fn members(mask: u16) -> impl Iterator<Item = usize> {
    (0..16).filter(move |i| mask >> i & 1 == 1)
}

fn refine(g: &SmallGraph, cells: &mut Cells) {
    'restart: loop {
        for s in 0..cells.len() {
            let splitter = cells[s];
            for c in 0..cells.len() {
                let cell = cells[c];
                if cell.count_ones() == 1 {
                    continue;
                }
                let mut groups: Vec<(u32, u16)> = Vec::new();
                for x in members(cell) {
                    let d = (g.adj[x] & splitter).count_ones();
                    match groups.iter_mut().find(|e| e.0 == d) {
                        Some(e) => e.1 |= 1 << x,
                        None => groups.push((d, 1 << x)),
                    }
                }
                if groups.len() > 1 {
                    groups.sort_unstable_by_key(|e| e.0);
                    cells.splice(c..=c, groups.into_iter().map(|e| e.1));
                    continue 'restart;
                }
            }
        }
        return;
    }
}

struct Search<'a> {
    g: &'a SmallGraph,
    best: Option<(u128, Vec<usize>)>,
    autos: Vec<Vec<usize>>,
}

impl Search<'_> {
    /// `order[label] = vertex` for a discrete partition.
    fn leaf(&mut self, cells: &Cells) {
        let order: Vec<usize> = cells.iter().map(|c| c.trailing_zeros() as usize).collect();
        let cert = self.g.permuted(&order).packed();
        match &self.best {
            Some((b, _)) if cert < *b => {}
            Some((b, best_order)) if cert == *b => {
                let n = order.len();
                let mut gamma = vec![0; n];
                for l in 0..n {
                    gamma[order[l]] = best_order[l];
                }
                if gamma.iter().enumerate().any(|(i, &x)| i != x) {
                    self.autos.push(gamma);
                }
            }
            _ => self.best = Some((cert, order)),
        }
    }

    fn orbit_hits(&self, fixed: &[usize], w: usize, explored: &[usize]) -> bool {
        let gens: Vec<&Vec<usize>> = self
            .autos
            .iter()
            .filter(|a| fixed.iter().all(|&f| a[f] == f))
            .collect();
        if gens.is_empty() {
            return false;
        }
        let mut seen: u16 = 1 << w;
        let mut stack = vec![w];
        while let Some(x) = stack.pop() {
            for a in &gens {
                let y = a[x];
                if seen >> y & 1 == 0 {
                    seen |= 1 << y;
                    stack.push(y);
                }
            }
        }
        explored.iter().any(|&e| seen >> e & 1 == 1)
    }

    fn visit(&mut self, cells: Cells, fixed: &mut Vec<usize>) {
        let Some(target) = cells.iter().position(|c| c.count_ones() > 1) else {
            self.leaf(&cells);
            return;
        };
        let cell = cells[target];
        let mut explored: Vec<usize> = Vec::new();
        for w in members(cell) {
            let twin = explored.iter().any(|&e| self.g.twins(e, w));
            if twin || self.orbit_hits(fixed, w, &explored) {
                continue;
            }
            let mut next = cells.clone();
            next.splice(target..=target, [1u16 << w, cell & !(1 << w)]);
            refine(self.g, &mut next);
            fixed.push(w);
            self.visit(next, fixed);
            fixed.pop();
            explored.push(w);
        }
    }
}

/// Canonical packed adjacency and the labeling achieving it (`order[label] = vertex`).
pub(crate) fn canonical_form(g: &SmallGraph) -> (u128, Vec<usize>) {
    if g.n == 0 {
        return (0, Vec::new());
    }
    let mut cells: Cells = vec![((1u32 << g.n) - 1) as u16];
    refine(g, &mut cells);
    let mut search = Search {
        g,
        best: None,
        autos: Vec::new(),
    };
    search.visit(cells, &mut Vec::new());
    search.best.expect("at least one leaf")
}
