//! Integer treelet encoding for `k <= 8`: every colorful rooted treelet gets
//! an 11-bit index, and merge/decompose become table lookups.

use std::collections::HashMap;
use std::fs::File;
use std::io::{BufWriter, Read, Write};
use std::path::Path;

use super::{enumerate_colored, enumerate_shapes, ColoredTreelet};
use crate::error::{Error, Result};

pub const ITE_FAIL: u16 = u16::MAX;
pub const MAX_ITE_K: usize = 8;
const MAGIC: &[u8; 4] = b"ITE1";

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TreeletIndexTables {
    k: usize,
    treelets: Vec<ColoredTreelet>,
    codes: HashMap<u64, u16>,
    size_start: Vec<usize>,
    merge_offsets: Vec<usize>,
    merge: Vec<u16>,
    decomp: Vec<[u16; 2]>,
    beta: Vec<u8>,
    skeleton: Vec<(u16, u16)>,
}

impl TreeletIndexTables {
    pub fn new(k: usize) -> Result<TreeletIndexTables> {
        if !(1..=MAX_ITE_K).contains(&k) {
            return Err(Error::invalid(format!("integer treelet encoding needs k <= {MAX_ITE_K}")));
        }
        let treelets = enumerate_colored(k);
        let codes: HashMap<u64, u16> = treelets.iter().enumerate().map(|(i, t)| (t.key(), i as u16)).collect();
        let size_start = size_starts(k, &treelets);
        let (merge_offsets, merge_len) = merge_layout(k, &size_start);
        let mut merge = vec![ITE_FAIL; merge_len];
        for h1 in 1..k {
            for h2 in 1..=k - h1 {
                let base = merge_offsets[h1 * (k + 1) + h2];
                let width = size_start[h2 + 1] - size_start[h2];
                for i in size_start[h1]..size_start[h1 + 1] {
                    for j in size_start[h2]..size_start[h2 + 1] {
                        if let Some(t) = treelets[i].merge(&treelets[j])? {
                            merge[base + (i - size_start[h1]) * width + (j - size_start[h2])] = codes[&t.key()];
                        }
                    }
                }
            }
        }
        let shapes = enumerate_shapes(k);
        let shape_ids: HashMap<_, _> = shapes.iter().enumerate().map(|(i, s)| (*s, i as u16)).collect();
        let mut decomp = Vec::with_capacity(treelets.len());
        let mut beta = Vec::with_capacity(treelets.len());
        let mut skeleton = Vec::with_capacity(treelets.len());
        for t in &treelets {
            if t.size() == 1 {
                decomp.push([ITE_FAIL, ITE_FAIL]);
            } else {
                let (a, b) = t.canonical_decompose()?;
                decomp.push([codes[&a.key()], codes[&b.key()]]);
            }
            beta.push(t.beta() as u8);
            skeleton.push((shape_ids[&t.shape()], t.colors()));
        }
        Ok(TreeletIndexTables {
            k,
            treelets,
            codes,
            size_start,
            merge_offsets,
            merge,
            decomp,
            beta,
            skeleton,
        })
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn count(&self) -> usize {
        self.treelets.len()
    }

    pub fn to_code(&self, t: &ColoredTreelet) -> Option<u16> {
        self.codes.get(&t.key()).copied()
    }

    pub fn code_of_key(&self, key: u64) -> Option<u16> {
        self.codes.get(&key).copied()
    }

    pub fn from_code(&self, code: u16) -> Option<ColoredTreelet> {
        self.treelets.get(code as usize).copied()
    }

    /// Index of `merge(from_code(i), from_code(j))`, or [`ITE_FAIL`].
    pub fn merge(&self, i: u16, j: u16) -> u16 {
        let (i, j) = (i as usize, j as usize);
        if i >= self.count() || j >= self.count() {
            return ITE_FAIL;
        }
        let h1 = self.treelets[i].size();
        let h2 = self.treelets[j].size();
        if h1 + h2 > self.k {
            return ITE_FAIL;
        }
        let base = self.merge_offsets[h1 * (self.k + 1) + h2];
        let width = self.size_start[h2 + 1] - self.size_start[h2];
        self.merge[base + (i - self.size_start[h1]) * width + (j - self.size_start[h2])]
    }

    /// Canonical decomposition `(t1, t2)` of a non-singleton.
    pub fn decompose(&self, code: u16) -> Option<(u16, u16)> {
        let [a, b] = *self.decomp.get(code as usize)?;
        (a != ITE_FAIL).then_some((a, b))
    }

    pub fn beta(&self, code: u16) -> u8 {
        self.beta[code as usize]
    }

    /// Uncolored shape id (position in `enumerate_shapes(k)`) and colorset.
    pub fn skeleton(&self, code: u16) -> (u16, u16) {
        self.skeleton[code as usize]
    }

    /// Bytes held by the lookup arrays.
    pub fn table_bytes(&self) -> usize {
        self.merge.len() * 2 + self.decomp.len() * 4 + self.beta.len() + self.skeleton.len() * 4 + self.treelets.len() * 8
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        let mut buf = Vec::with_capacity(self.table_bytes() + 64);
        buf.extend_from_slice(MAGIC);
        buf.extend_from_slice(&(self.k as u32).to_le_bytes());
        buf.extend_from_slice(&(self.count() as u32).to_le_bytes());
        buf.extend_from_slice(&(self.merge.len() as u64).to_le_bytes());
        for t in &self.treelets {
            buf.extend_from_slice(&t.key().to_le_bytes());
        }
        for m in &self.merge {
            buf.extend_from_slice(&m.to_le_bytes());
        }
        for [a, b] in &self.decomp {
            buf.extend_from_slice(&a.to_le_bytes());
            buf.extend_from_slice(&b.to_le_bytes());
        }
        buf.extend_from_slice(&self.beta);
        for (s, c) in &self.skeleton {
            buf.extend_from_slice(&s.to_le_bytes());
            buf.extend_from_slice(&c.to_le_bytes());
        }
        let crc = crc32fast::hash(&buf);
        buf.extend_from_slice(&crc.to_le_bytes());
        let f = File::create(path).map_err(|e| Error::io(path, e))?;
        let mut w = BufWriter::new(f);
        w.write_all(&buf).and_then(|_| w.flush()).map_err(|e| Error::io(path, e))
    }

    pub fn read(path: &Path) -> Result<TreeletIndexTables> {
        let mut buf = Vec::new();
        File::open(path)
            .and_then(|mut f| f.read_to_end(&mut buf))
            .map_err(|e| Error::io(path, e))?;
        if buf.len() < 24 || &buf[..4] != MAGIC {
            return Err(Error::format(path, "missing ITE1 magic"));
        }
        let (body, tail) = buf.split_at(buf.len() - 4);
        if crc32fast::hash(body) != u32::from_le_bytes(tail.try_into().unwrap()) {
            return Err(Error::Checksum(path.to_path_buf()));
        }
        let mut r = Cursor { buf: body, pos: 4 };
        let k = r.u32() as usize;
        let count = r.u32() as usize;
        let merge_len = r.u64() as usize;
        if !(1..=MAX_ITE_K).contains(&k) {
            return Err(Error::format(path, "bad k"));
        }
        let need = 20 + count * 8 + merge_len * 2 + count * 4 + count + count * 4;
        if body.len() != need {
            return Err(Error::format(path, "truncated tables"));
        }
        let treelets: Vec<ColoredTreelet> = (0..count).map(|_| ColoredTreelet::from_key(r.u64())).collect();
        let merge = (0..merge_len).map(|_| r.u16()).collect();
        let decomp = (0..count).map(|_| [r.u16(), r.u16()]).collect();
        let beta = (0..count).map(|_| r.u8()).collect();
        let skeleton = (0..count).map(|_| (r.u16(), r.u16())).collect();
        let codes = treelets.iter().enumerate().map(|(i, t)| (t.key(), i as u16)).collect();
        let size_start = size_starts(k, &treelets);
        let (merge_offsets, expect_len) = merge_layout(k, &size_start);
        if expect_len != merge_len {
            return Err(Error::format(path, "merge table size mismatch"));
        }
        Ok(TreeletIndexTables {
            k,
            treelets,
            codes,
            size_start,
            merge_offsets,
            merge,
            decomp,
            beta,
            skeleton,
        })
    }

    /// Reads the cache at `path`, regenerating (and rewriting) it when absent or stale.
    pub fn load_or_build(path: &Path, k: usize) -> Result<TreeletIndexTables> {
        if let Ok(t) = TreeletIndexTables::read(path) {
            if t.k == k {
                return Ok(t);
            }
        }
        let t = TreeletIndexTables::new(k)?;
        t.write(path)?;
        Ok(t)
    }
}

fn size_starts(k: usize, treelets: &[ColoredTreelet]) -> Vec<usize> {
    let mut start = vec![0usize; k + 2];
    for h in 1..=k + 1 {
        start[h] = treelets.iter().take_while(|t| t.size() < h).count();
    }
    start[0] = 0;
    start
}

fn merge_layout(k: usize, size_start: &[usize]) -> (Vec<usize>, usize) {
    let mut offsets = vec![0usize; (k + 1) * (k + 1)];
    let mut len = 0;
    for h1 in 1..k {
        for h2 in 1..=k - h1 {
            offsets[h1 * (k + 1) + h2] = len;
            len += (size_start[h1 + 1] - size_start[h1]) * (size_start[h2 + 1] - size_start[h2]);
        }
    }
    (offsets, len)
}

struct Cursor<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl Cursor<'_> {
    fn take<const N: usize>(&mut self) -> [u8; N] {
        let out = self.buf[self.pos..self.pos + N].try_into().unwrap();
        self.pos += N;
        out
    }
    fn u8(&mut self) -> u8 {
        self.take::<1>()[0]
    }
    fn u16(&mut self) -> u16 {
        u16::from_le_bytes(self.take())
    }
    fn u32(&mut self) -> u32 {
        u32::from_le_bytes(self.take())
    }
    fn u64(&mut self) -> u64 {
        u64::from_le_bytes(self.take())
    }
}
