//! Host graph: loading, normalization, CSR adjacency and node colorings.

use std::collections::HashMap;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::Path;
use std::sync::Arc;

use rand::Rng;
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::rng;

pub const MAX_K: usize = 16;
const CACHE_MAGIC: &[u8; 4] = b"GFG1";

/// Undirected simple graph in compressed sparse rows.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Graph {
    offsets: Vec<u64>,
    neighbors: Vec<u32>,
    max_degree: usize,
}

impl Graph {
    /// Builds a graph on `n` nodes from an edge list, dropping self-loops and
    /// duplicates.
    pub fn from_edges(n: usize, edges: &[(u32, u32)]) -> Result<Graph> {
        let mut degree = vec![0u64; n];
        for &(u, v) in edges {
            if u as usize >= n || v as usize >= n {
                return Err(Error::invalid(format!("edge ({u},{v}) out of range for n={n}")));
            }
            if u != v {
                degree[u as usize] += 1;
                degree[v as usize] += 1;
            }
        }
        let mut offsets = Vec::with_capacity(n + 1);
        offsets.push(0u64);
        for d in &degree {
            offsets.push(offsets.last().unwrap() + d);
        }
        let mut fill: Vec<u64> = offsets[..n].to_vec();
        let mut neighbors = vec![0u32; *offsets.last().unwrap() as usize];
        for &(u, v) in edges {
            if u == v {
                continue;
            }
            neighbors[fill[u as usize] as usize] = v;
            fill[u as usize] += 1;
            neighbors[fill[v as usize] as usize] = u;
            fill[v as usize] += 1;
        }
        // sort + dedup each row, then compact
        let mut compact = Vec::with_capacity(neighbors.len());
        let mut new_offsets = Vec::with_capacity(n + 1);
        new_offsets.push(0u64);
        let mut max_degree = 0;
        for v in 0..n {
            let row = &mut neighbors[offsets[v] as usize..offsets[v + 1] as usize];
            row.sort_unstable();
            let start = compact.len();
            for &u in row.iter() {
                if compact.len() == start || *compact.last().unwrap() != u {
                    compact.push(u);
                }
            }
            max_degree = max_degree.max(compact.len() - start);
            new_offsets.push(compact.len() as u64);
        }
        compact.shrink_to_fit();
        Ok(Graph {
            offsets: new_offsets,
            neighbors: compact,
            max_degree,
        })
    }

    pub fn node_count(&self) -> usize {
        self.offsets.len() - 1
    }

    pub fn edge_count(&self) -> usize {
        self.neighbors.len() / 2
    }

    pub fn max_degree(&self) -> usize {
        self.max_degree
    }

    #[inline]
    pub fn neighbors(&self, v: u32) -> &[u32] {
        let v = v as usize;
        &self.neighbors[self.offsets[v] as usize..self.offsets[v + 1] as usize]
    }

    #[inline]
    pub fn degree(&self, v: u32) -> usize {
        let v = v as usize;
        (self.offsets[v + 1] - self.offsets[v]) as usize
    }

    pub fn has_edge(&self, u: u32, v: u32) -> bool {
        self.neighbors(u).binary_search(&v).is_ok()
    }

    pub fn edges(&self) -> impl Iterator<Item = (u32, u32)> + '_ {
        (0..self.node_count() as u32)
            .flat_map(move |u| self.neighbors(u).iter().filter(move |&&v| u < v).map(move |&v| (u, v)))
    }

    /// SHA-256 over the normalized CSR, hex encoded.
    pub fn content_hash(&self) -> String {
        let mut h = Sha256::new();
        h.update((self.node_count() as u64).to_le_bytes());
        h.update((self.edge_count() as u64).to_le_bytes());
        for o in &self.offsets {
            h.update(o.to_le_bytes());
        }
        for v in &self.neighbors {
            h.update(v.to_le_bytes());
        }
        h.finalize().iter().map(|b| format!("{b:02x}")).collect()
    }

    /// Writes the binary cache: magic, n, m, row offsets, neighbor ids.
    pub fn write_cache(&self, path: &Path) -> Result<()> {
        let f = File::create(path).map_err(|e| Error::io(path, e))?;
        let mut w = BufWriter::new(f);
        let mut put = |bytes: &[u8]| w.write_all(bytes).map_err(|e| Error::io(path, e));
        put(CACHE_MAGIC)?;
        put(&(self.node_count() as u64).to_le_bytes())?;
        put(&(self.edge_count() as u64).to_le_bytes())?;
        for o in &self.offsets {
            put(&o.to_le_bytes())?;
        }
        for v in &self.neighbors {
            put(&v.to_le_bytes())?;
        }
        w.flush().map_err(|e| Error::io(path, e))
    }

    pub fn read_cache(path: &Path) -> Result<Graph> {
        let mut bytes = Vec::new();
        File::open(path)
            .and_then(|mut f| f.read_to_end(&mut bytes))
            .map_err(|e| Error::io(path, e))?;
        if bytes.len() < 20 || &bytes[..4] != CACHE_MAGIC {
            return Err(Error::format(path, "missing GFG1 magic"));
        }
        let n = u64::from_le_bytes(bytes[4..12].try_into().unwrap()) as usize;
        let m = u64::from_le_bytes(bytes[12..20].try_into().unwrap()) as usize;
        let need = 20 + 8 * (n + 1) + 4 * 2 * m;
        if bytes.len() != need {
            return Err(Error::format(path, format!("expected {need} bytes, found {}", bytes.len())));
        }
        let mut pos = 20;
        let offsets: Vec<u64> = (0..=n)
            .map(|i| u64::from_le_bytes(bytes[pos + 8 * i..pos + 8 * i + 8].try_into().unwrap()))
            .collect();
        pos += 8 * (n + 1);
        let neighbors: Vec<u32> = (0..2 * m)
            .map(|i| u32::from_le_bytes(bytes[pos + 4 * i..pos + 4 * i + 4].try_into().unwrap()))
            .collect();
        if offsets[0] != 0 || offsets[n] as usize != 2 * m || offsets.windows(2).any(|w| w[0] > w[1]) {
            return Err(Error::format(path, "inconsistent row offsets"));
        }
        let max_degree = offsets.windows(2).map(|w| (w[1] - w[0]) as usize).max().unwrap_or(0);
        Ok(Graph {
            offsets,
            neighbors,
            max_degree,
        })
    }

    /// Loads a text edge list or, if the file starts with the cache magic, a binary cache.
    pub fn open(path: &Path) -> Result<Graph> {
        let mut f = File::open(path).map_err(|e| Error::io(path, e))?;
        let mut magic = [0u8; 4];
        let is_cache = f.read(&mut magic).map_err(|e| Error::io(path, e))? == 4 && &magic == CACHE_MAGIC;
        drop(f);
        if is_cache {
            Graph::read_cache(path)
        } else {
            let f = File::open(path).map_err(|e| Error::io(path, e))?;
            Ok(load_edge_list(BufReader::new(f))?.graph)
        }
    }
}

/// A loaded edge list together with the original id of each dense node.
#[derive(Clone, Debug)]
pub struct LoadedGraph {
    pub graph: Graph,
    pub original_ids: Vec<u64>,
}

/// Parses whitespace-separated node-id pairs; `#` and `%` start comment lines.
/// Ids are remapped to `0..n` in first-appearance order.
pub fn load_edge_list<R: BufRead>(reader: R) -> Result<LoadedGraph> {
    let mut ids: HashMap<u64, u32> = HashMap::new();
    let mut original_ids = Vec::new();
    let mut edges = Vec::new();
    let mut intern = |raw: u64, original_ids: &mut Vec<u64>| -> u32 {
        *ids.entry(raw).or_insert_with(|| {
            original_ids.push(raw);
            (original_ids.len() - 1) as u32
        })
    };
    for (lineno, line) in reader.lines().enumerate() {
        let line = line.map_err(|e| Error::Parse {
            line: lineno + 1,
            msg: e.to_string(),
        })?;
        let trimmed = line.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') || trimmed.starts_with('%') {
            continue;
        }
        let mut tokens = trimmed.split_whitespace();
        let mut next_id = || -> Result<u64> {
            let tok = tokens.next().ok_or_else(|| Error::Parse {
                line: lineno + 1,
                msg: "expected two node ids".into(),
            })?;
            tok.parse::<u64>().map_err(|_| Error::Parse {
                line: lineno + 1,
                msg: format!("malformed node id {tok:?}"),
            })
        };
        let a = next_id()?;
        let b = next_id()?;
        let u = intern(a, &mut original_ids);
        let v = intern(b, &mut original_ids);
        edges.push((u, v));
    }
    if original_ids.is_empty() {
        return Err(Error::EmptyGraph);
    }
    let graph = Graph::from_edges(original_ids.len(), &edges)?;
    Ok(LoadedGraph { graph, original_ids })
}

/// Host graph plus one color in `0..k` per node.
#[derive(Clone, Debug)]
pub struct ColoredGraph {
    graph: Arc<Graph>,
    colors: Vec<u8>,
    k: usize,
    lambda: Option<f64>,
}

impl ColoredGraph {
    pub fn with_colors(graph: Arc<Graph>, k: usize, colors: Vec<u8>) -> Result<ColoredGraph> {
        check_k(k)?;
        if colors.len() != graph.node_count() {
            return Err(Error::invalid("one color per node required"));
        }
        if colors.iter().any(|&c| c as usize >= k) {
            return Err(Error::invalid(format!("colors must lie in 0..{k}")));
        }
        Ok(ColoredGraph {
            graph,
            colors,
            k,
            lambda: None,
        })
    }

    /// Independent uniform colors in `0..k`.
    pub fn uniform(graph: Arc<Graph>, k: usize, seed: u64) -> Result<ColoredGraph> {
        check_k(k)?;
        let mut rng = rng::stream(seed, rng::COLORING_STREAM);
        let colors = (0..graph.node_count()).map(|_| rng.gen_range(0..k) as u8).collect();
        Ok(ColoredGraph {
            graph,
            colors,
            k,
            lambda: None,
        })
    }

    /// Color 0 with probability `1 - lambda (k-1)`, every other color with probability `lambda`.
    pub fn biased(graph: Arc<Graph>, k: usize, lambda: f64, seed: u64) -> Result<ColoredGraph> {
        check_k(k)?;
        check_lambda(k, lambda)?;
        let mut rng = rng::stream(seed, rng::COLORING_STREAM);
        let zero = 1.0 - lambda * (k as f64 - 1.0);
        let colors = (0..graph.node_count())
            .map(|_| {
                let x: f64 = rng.gen();
                if x < zero {
                    0u8
                } else {
                    let i = ((x - zero) / lambda) as usize;
                    (1 + i.min(k - 2)) as u8
                }
            })
            .collect();
        Ok(ColoredGraph {
            graph,
            colors,
            k,
            lambda: Some(lambda),
        })
    }

    pub fn graph(&self) -> &Graph {
        &self.graph
    }

    pub fn shared_graph(&self) -> Arc<Graph> {
        Arc::clone(&self.graph)
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn lambda(&self) -> Option<f64> {
        self.lambda
    }

    #[inline]
    pub fn color(&self, v: u32) -> u8 {
        self.colors[v as usize]
    }

    pub fn colors(&self) -> &[u8] {
        &self.colors
    }
}

pub fn check_k(k: usize) -> Result<()> {
    if !(3..=MAX_K).contains(&k) {
        return Err(Error::invalid(format!("k must be in 3..={MAX_K}, got {k}")));
    }
    Ok(())
}

pub fn check_lambda(k: usize, lambda: f64) -> Result<()> {
    if !(lambda > 0.0 && lambda < 1.0 / (k as f64 - 1.0)) {
        return Err(Error::invalid(format!(
            "lambda must lie in (0, 1/(k-1)) = (0, {:.6}), got {lambda}",
            1.0 / (k as f64 - 1.0)
        )));
    }
    Ok(())
}

/// Writes one original id per line, line `i` holding the id of dense node `i`.
pub fn write_id_map(path: &Path, original_ids: &[u64]) -> Result<()> {
    let f = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(f);
    for id in original_ids {
        writeln!(w, "{id}").map_err(|e| Error::io(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

/// Edge list of the lollipop graph: a clique on `clique` nodes and a path of
/// `tail` nodes hanging off clique node 0.
pub fn lollipop_edges(clique: u32, tail: u32) -> Vec<(u32, u32)> {
    let mut edges = Vec::new();
    for a in 0..clique {
        for b in a + 1..clique {
            edges.push((a, b));
        }
    }
    let mut prev = 0;
    for t in 0..tail {
        edges.push((prev, clique + t));
        prev = clique + t;
    }
    edges
}
