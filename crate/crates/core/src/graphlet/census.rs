//! Graphlet class census.

use std::collections::BTreeSet;

use rayon::prelude::*;

use super::{canonical_signature, GraphletSignature, SmallGraph};
use crate::error::{Error, Result};
use crate::graph::MAX_K;

/// Connected unlabeled graphs on `n` nodes, `n = 1..=16`.
const CONNECTED_GRAPHS: [u128; MAX_K] = [
    1,
    1,
    2,
    6,
    21,
    112,
    853,
    11117,
    261080,
    11716571,
    1006700565,
    164059830476,
    50335907869219,
    29003487462848061,
    31397381142761241960,
    63969560113225176176277,
];

/// Number of connected `k`-node graphlet classes.
pub fn class_count(k: usize) -> Result<u128> {
    if !(1..=MAX_K).contains(&k) {
        return Err(Error::SizeOverflow(k));
    }
    Ok(CONNECTED_GRAPHS[k - 1])
}

/// Every connected `k`-node class, sorted, for `k <= 8`. Classes up to seven
/// nodes come from all labeled graphs; eight-node classes from adding a node
/// to every seven-node class in all possible ways.
pub fn connected_classes(k: usize) -> Result<Vec<GraphletSignature>> {
    match k {
        1..=7 => {
            let pairs = k * (k - 1) / 2;
            let found: BTreeSet<GraphletSignature> = (0u64..1 << pairs)
                .into_par_iter()
                .filter_map(|mask| {
                    let g = SmallGraph::from_packed(k, if pairs == 0 { 0 } else { (mask as u128) << (128 - pairs) });
                    g.is_connected().then(|| canonical_signature(&g))
                })
                .collect::<Vec<_>>()
                .into_iter()
                .collect();
            Ok(found.into_iter().collect())
        }
        8 => {
            let base = connected_classes(7)?;
            let found: BTreeSet<GraphletSignature> = base
                .par_iter()
                .flat_map_iter(|sig| {
                    let g7 = sig.to_graph(7);
                    (1u16..1 << 7).map(move |nbrs| {
                        let mut g = SmallGraph::empty(8);
                        for (a, b) in g7.edges() {
                            g.add_edge(a, b);
                        }
                        for v in 0..7 {
                            if nbrs >> v & 1 == 1 {
                                g.add_edge(v, 7);
                            }
                        }
                        canonical_signature(&g)
                    })
                })
                .collect::<Vec<_>>()
                .into_iter()
                .collect();
            Ok(found.into_iter().collect())
        }
        _ => Err(Error::invalid(format!("class enumeration is limited to k <= 8, got {k}"))),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn small_censuses() {
        assert_eq!(connected_classes(3).unwrap().len(), 2);
        assert_eq!(connected_classes(4).unwrap().len(), 6);
        assert_eq!(connected_classes(5).unwrap().len(), 21);
        assert_eq!(class_count(5).unwrap(), 21);
        assert!(class_count(17).is_err());
    }
}
