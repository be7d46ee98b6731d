//! On-disk count tables.
//!
//! Layout (all integers little-endian): magic `MCT1`, a header with the build
//! flags and totals, an offset index of `n + 1` u64 values relative to the
//! payload start, the per-node records in node order, and a trailing crc32 of
//! everything before it. Fixed-width records hold `(48-bit key, 128-bit
//! cumulative count)` pairs; VLC records hold `(11-bit index, raw count)`.

use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::sync::Arc;

use memmap2::Mmap;

use super::vlc;
use crate::count::{self, Count};
use crate::error::{Error, Result};
use crate::treelet::{ColoredTreelet, TreeletIndexTables, TreeletShape};

pub const MAGIC: &[u8; 4] = b"MCT1";
pub const FIXED_ENTRY: usize = 6 + 16;

const FLAG_VLC: u8 = 1;
const FLAG_ZERO_ROOTED: u8 = 2;
const FLAG_ROUND_SKIPPED: u8 = 4;
const FLAG_BIASED: u8 = 8;

/// Per-copy total of one unrooted `k`-shape. `multiplicity` is the number of
/// stored rooted entries per copy (1 zero-rooted, `k` all-rooted, the
/// balanced-root count when round-skipped, 0 when not counted at all).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ShapeTotal {
    pub shape: TreeletShape,
    pub total: Count,
    pub multiplicity: u32,
}

#[derive(Clone, Debug, PartialEq)]
pub struct TableHeader {
    pub k: usize,
    pub h: usize,
    pub n: usize,
    pub vlc: bool,
    pub zero_rooted: bool,
    pub round_skipped: bool,
    pub lambda: Option<f64>,
    /// Colorful `k`-treelet copies stored in the table (stars excluded when round-skipped).
    pub total: Count,
    pub shapes: Vec<ShapeTotal>,
    /// `sum_v C(d_v, k-1)`; only set when round-skipped.
    pub star_total: Count,
}

impl TableHeader {
    fn encode(&self) -> Vec<u8> {
        let mut b = Vec::with_capacity(96 + 40 * self.shapes.len());
        b.extend_from_slice(MAGIC);
        b.push(self.k as u8);
        b.push(self.h as u8);
        let mut flags = 0;
        if self.vlc {
            flags |= FLAG_VLC;
        }
        if self.zero_rooted {
            flags |= FLAG_ZERO_ROOTED;
        }
        if self.round_skipped {
            flags |= FLAG_ROUND_SKIPPED;
        }
        if self.lambda.is_some() {
            flags |= FLAG_BIASED;
        }
        b.push(flags);
        b.push(0);
        b.extend_from_slice(&(self.n as u64).to_le_bytes());
        b.extend_from_slice(&self.lambda.unwrap_or(0.0).to_le_bytes());
        b.extend_from_slice(&self.total.to_le_bytes::<32>());
        b.extend_from_slice(&(self.shapes.len() as u32).to_le_bytes());
        for s in &self.shapes {
            b.extend_from_slice(&s.total.to_le_bytes::<32>());
            b.extend_from_slice(&s.multiplicity.to_le_bytes());
            b.push(s.shape.size() as u8);
            b.extend_from_slice(&s.shape.bits().to_le_bytes());
        }
        b.extend_from_slice(&self.star_total.to_le_bytes::<32>());
        b
    }

    fn decode(buf: &[u8], path: &Path) -> Result<(TableHeader, usize)> {
        let bad = |m: &str| Error::format(path, m.to_string());
        if buf.len() < 60 || &buf[..4] != MAGIC {
            return Err(bad("missing MCT1 magic"));
        }
        let k = buf[4] as usize;
        let h = buf[5] as usize;
        let flags = buf[6];
        let n = u64::from_le_bytes(buf[8..16].try_into().unwrap()) as usize;
        let lambda = f64::from_le_bytes(buf[16..24].try_into().unwrap());
        let total = Count::from_le_bytes::<32>(buf[24..56].try_into().unwrap());
        let num = u32::from_le_bytes(buf[56..60].try_into().unwrap()) as usize;
        let mut pos = 60;
        let end = pos + num * 41 + 32;
        if buf.len() < end || num > 1 << 20 {
            return Err(bad("truncated header"));
        }
        let mut shapes = Vec::with_capacity(num);
        for _ in 0..num {
            let total = Count::from_le_bytes::<32>(buf[pos..pos + 32].try_into().unwrap());
            let multiplicity = u32::from_le_bytes(buf[pos + 32..pos + 36].try_into().unwrap());
            let size = buf[pos + 36] as usize;
            let bits = u32::from_le_bytes(buf[pos + 37..pos + 41].try_into().unwrap());
            let shape = TreeletShape::new(size, bits).map_err(|_| bad("invalid shape in header"))?;
            shapes.push(ShapeTotal {
                shape,
                total,
                multiplicity,
            });
            pos += 41;
        }
        let star_total = Count::from_le_bytes::<32>(buf[pos..pos + 32].try_into().unwrap());
        pos += 32;
        let header = TableHeader {
            k,
            h,
            n,
            vlc: flags & FLAG_VLC != 0,
            zero_rooted: flags & FLAG_ZERO_ROOTED != 0,
            round_skipped: flags & FLAG_ROUND_SKIPPED != 0,
            lambda: (flags & FLAG_BIASED != 0).then_some(lambda),
            total,
            shapes,
            star_total,
        };
        Ok((header, pos))
    }
}

/// Serializes one record from raw `(id, count)` entries sorted by id. `id`
/// is the ITE index under VLC and the 48-bit treelet key otherwise.
pub fn encode_record(entries: &[(u64, Count)], vlc_format: bool, out: &mut Vec<u8>) -> Result<()> {
    if vlc_format {
        for (id, c) in entries {
            vlc::encode(*id as u16, c, out)?;
        }
        return Ok(());
    }
    let mut cum: u128 = 0;
    for (key, c) in entries {
        let c: u128 = (*c)
            .try_into()
            .map_err(|_| Error::Overflow("count exceeds the 128-bit fixed-width format".into()))?;
        cum = cum
            .checked_add(c)
            .ok_or_else(|| Error::Overflow("cumulative count exceeds 128 bits".into()))?;
        out.extend_from_slice(&key.to_le_bytes()[..6]);
        out.extend_from_slice(&cum.to_le_bytes());
    }
    Ok(())
}

/// Records appended in completion order, then rewritten in node order.
pub struct SpillWriter {
    path: PathBuf,
    out: BufWriter<File>,
}

impl SpillWriter {
    pub fn create(path: &Path) -> Result<SpillWriter> {
        let f = File::create(path).map_err(|e| Error::io(path, e))?;
        Ok(SpillWriter {
            path: path.to_path_buf(),
            out: BufWriter::with_capacity(1 << 20, f),
        })
    }

    pub fn append(&mut self, node: u32, record: &[u8]) -> Result<()> {
        let path = &self.path;
        self.out
            .write_all(&node.to_le_bytes())
            .and_then(|_| self.out.write_all(&(record.len() as u64).to_le_bytes()))
            .and_then(|_| self.out.write_all(record))
            .map_err(|e| Error::io(path, e))
    }

    /// Second pass: writes the final table at `dest` ordered by node id and removes the spill.
    pub fn flush_and_sort(self, header: &TableHeader, dest: &Path) -> Result<()> {
        let SpillWriter { path, out } = self;
        let f = out.into_inner().map_err(|e| Error::io(&path, e.into_error()))?;
        f.sync_all().map_err(|e| Error::io(&path, e))?;
        drop(f);
        let spill = File::open(&path).map_err(|e| Error::io(&path, e))?;
        let len = spill.metadata().map_err(|e| Error::io(&path, e))?.len();
        let map = if len == 0 {
            None
        } else {
            // SAFETY: the spill file is private to this build and not modified while mapped.
            Some(unsafe { Mmap::map(&spill) }.map_err(|e| Error::io(&path, e))?)
        };
        let bytes: &[u8] = map.as_deref().unwrap_or(&[]);
        let mut spans = vec![(0usize, 0usize); header.n];
        let mut seen = vec![false; header.n];
        let mut pos = 0;
        while pos < bytes.len() {
            if pos + 12 > bytes.len() {
                return Err(Error::format(&path, "truncated spill entry"));
            }
            let v = u32::from_le_bytes(bytes[pos..pos + 4].try_into().unwrap()) as usize;
            let l = u64::from_le_bytes(bytes[pos + 4..pos + 12].try_into().unwrap()) as usize;
            if v >= header.n || seen[v] || pos + 12 + l > bytes.len() {
                return Err(Error::format(&path, "corrupt spill entry"));
            }
            seen[v] = true;
            spans[v] = (pos + 12, l);
            pos += 12 + l;
        }
        write_table(dest, header, |v| &bytes[spans[v].0..spans[v].0 + spans[v].1])?;
        drop(map);
        fs::remove_file(&path).map_err(|e| Error::io(&path, e))
    }
}

/// Writes a complete table whose record for node `v` is `record(v)`.
pub fn write_table<'a>(dest: &Path, header: &TableHeader, record: impl Fn(usize) -> &'a [u8]) -> Result<()> {
    let f = File::create(dest).map_err(|e| Error::io(dest, e))?;
    let mut w = BufWriter::with_capacity(1 << 20, f);
    let mut crc = crc32fast::Hasher::new();
    let mut put = |w: &mut BufWriter<File>, b: &[u8]| -> Result<()> {
        crc.update(b);
        w.write_all(b).map_err(|e| Error::io(dest, e))
    };
    put(&mut w, &header.encode())?;
    let mut off = 0u64;
    put(&mut w, &off.to_le_bytes())?;
    for v in 0..header.n {
        off += record(v).len() as u64;
        put(&mut w, &off.to_le_bytes())?;
    }
    for v in 0..header.n {
        put(&mut w, record(v))?;
    }
    let sum = crc.finalize();
    w.write_all(&sum.to_le_bytes()).map_err(|e| Error::io(dest, e))?;
    let f = w.into_inner().map_err(|e| Error::io(dest, e.into_error()))?;
    f.sync_all().map_err(|e| Error::io(dest, e))
}

/// A memory-mapped count table for one round.
pub struct CountTable {
    path: PathBuf,
    header: TableHeader,
    map: Mmap,
    index_start: usize,
    payload_start: usize,
    ite: Option<Arc<TreeletIndexTables>>,
}

impl std::fmt::Debug for CountTable {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("CountTable")
            .field("path", &self.path)
            .field("header", &self.header)
            .finish()
    }
}

impl CountTable {
    /// Maps `path` and verifies its checksum. VLC tables need the index tables for their `k`.
    pub fn open(path: &Path, ite: Option<Arc<TreeletIndexTables>>) -> Result<CountTable> {
        let f = File::open(path).map_err(|e| Error::io(path, e))?;
        // SAFETY: tables are written once and only read afterwards.
        let map = unsafe { Mmap::map(&f) }.map_err(|e| Error::io(path, e))?;
        if map.len() < 4 {
            return Err(Error::format(path, "file too short"));
        }
        let body_len = map.len() - 4;
        let (header, index_start) = {
            let (body, tail) = map.split_at(body_len);
            if crc32fast::hash(body) != u32::from_le_bytes(tail.try_into().unwrap()) {
                return Err(Error::Checksum(path.to_path_buf()));
            }
            TableHeader::decode(body, path)?
        };
        let payload_start = index_start + (header.n + 1) * 8;
        if body_len < payload_start {
            return Err(Error::format(path, "truncated offset index"));
        }
        let ite = if header.vlc {
            match ite {
                Some(t) if t.k() == header.k => Some(t),
                _ => Some(Arc::new(TreeletIndexTables::new(header.k)?)),
            }
        } else {
            ite
        };
        let t = CountTable {
            path: path.to_path_buf(),
            header,
            map,
            index_start,
            payload_start,
            ite,
        };
        if t.payload_start + t.offset(t.header.n) as usize != body_len {
            return Err(Error::format(path, "payload length does not match the index"));
        }
        Ok(t)
    }

    pub fn header(&self) -> &TableHeader {
        &self.header
    }

    pub fn path(&self) -> &Path {
        &self.path
    }

    pub fn node_count(&self) -> usize {
        self.header.n
    }

    pub fn is_vlc(&self) -> bool {
        self.header.vlc
    }

    pub fn index_tables(&self) -> Option<&Arc<TreeletIndexTables>> {
        self.ite.as_ref()
    }

    #[inline]
    fn offset(&self, v: usize) -> u64 {
        let p = self.index_start + v * 8;
        u64::from_le_bytes(self.map[p..p + 8].try_into().unwrap())
    }

    fn check_node(&self, v: u32) -> Result<()> {
        if v as usize >= self.header.n {
            return Err(Error::invalid(format!("node {v} out of range (n = {})", self.header.n)));
        }
        Ok(())
    }

    /// Raw bytes of the record of `v`.
    #[inline]
    pub fn record_bytes(&self, v: u32) -> &[u8] {
        let a = self.payload_start + self.offset(v as usize) as usize;
        let b = self.payload_start + self.offset(v as usize + 1) as usize;
        &self.map[a..b]
    }

    /// Number of fixed-width entries of `v`.
    #[inline]
    pub fn fixed_len(&self, v: u32) -> usize {
        self.record_bytes(v).len() / FIXED_ENTRY
    }

    /// Fixed-width entry `i` of `v`: `(key, cumulative count)`.
    #[inline]
    pub fn fixed_at(&self, v: u32, i: usize) -> (u64, u128) {
        let r = &self.record_bytes(v)[i * FIXED_ENTRY..(i + 1) * FIXED_ENTRY];
        let mut kb = [0u8; 8];
        kb[..6].copy_from_slice(&r[..6]);
        (u64::from_le_bytes(kb), u128::from_le_bytes(r[6..22].try_into().unwrap()))
    }

    /// Calls `f(stored id, raw count)` for every entry of `v` in key order.
    /// The id is the ITE index under VLC and the treelet key otherwise.
    pub fn for_each_raw(&self, v: u32, mut f: impl FnMut(u64, Count)) -> Result<()> {
        let rec = self.record_bytes(v);
        if self.header.vlc {
            let mut pos = 0;
            while pos < rec.len() {
                let (code, c, used) = vlc::decode(&rec[pos..]).map_err(|e| Error::format(&self.path, e.to_string()))?;
                f(code as u64, c);
                pos += used;
            }
        } else {
            let mut prev = 0u128;
            for i in 0..rec.len() / FIXED_ENTRY {
                let (key, cum) = self.fixed_at(v, i);
                f(key, Count::from(cum - prev));
                prev = cum;
            }
        }
        Ok(())
    }

    /// Treelet key of a stored id.
    #[inline]
    pub fn key_of(&self, id: u64) -> u64 {
        match (&self.ite, self.header.vlc) {
            (Some(ite), true) => ite.from_code(id as u16).map_or(u64::MAX, |t| t.key()),
            _ => id,
        }
    }

    /// `(treelet, raw count)` entries of `v`, in treelet order.
    pub fn entries(&self, v: u32) -> Result<Vec<(ColoredTreelet, Count)>> {
        self.check_node(v)?;
        let mut out = Vec::new();
        self.for_each_raw(v, |id, c| out.push((ColoredTreelet::from_key(self.key_of(id)), c)))?;
        Ok(out)
    }

    /// η_v: total count of treelets of this round rooted at `v`.
    pub fn occ_total(&self, v: u32) -> Result<Count> {
        self.check_node(v)?;
        if self.header.vlc {
            let mut sum = Count::ZERO;
            let mut err = None;
            self.for_each_raw(v, |_, c| match count::add(sum, c) {
                Ok(s) => sum = s,
                Err(e) => err = Some(e),
            })?;
            return err.map_or(Ok(sum), Err);
        }
        let len = self.fixed_len(v);
        Ok(if len == 0 {
            Count::ZERO
        } else {
            Count::from(self.fixed_at(v, len - 1).1)
        })
    }

    /// c(t, v); zero when absent.
    pub fn occ(&self, t: &ColoredTreelet, v: u32) -> Result<Count> {
        self.check_node(v)?;
        let key = t.key();
        if self.header.vlc {
            let mut out = Count::ZERO;
            self.for_each_raw(v, |id, c| {
                if self.key_of(id) == key {
                    out = c;
                }
            })?;
            return Ok(out);
        }
        let len = self.fixed_len(v);
        let (mut lo, mut hi) = (0, len);
        while lo < hi {
            let mid = (lo + hi) / 2;
            if self.fixed_at(v, mid).0 < key {
                lo = mid + 1;
            } else {
                hi = mid;
            }
        }
        if lo < len && self.fixed_at(v, lo).0 == key {
            let prev = if lo == 0 { 0 } else { self.fixed_at(v, lo - 1).1 };
            Ok(Count::from(self.fixed_at(v, lo).1 - prev))
        } else {
            Ok(Count::ZERO)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn header(n: usize, vlc: bool) -> TableHeader {
        TableHeader {
            k: 3,
            h: 2,
            n,
            vlc,
            zero_rooted: false,
            round_skipped: false,
            lambda: Some(0.25),
            total: Count::from(9u64),
            shapes: vec![ShapeTotal {
                shape: TreeletShape::new(3, 0b1010).unwrap(),
                total: Count::from(9u64),
                multiplicity: 3,
            }],
            star_total: Count::ZERO,
        }
    }

    #[test]
    fn spill_sorts_by_node_and_round_trips() {
        let dir = tempfile::tempdir().unwrap();
        let hdr = header(4, false);
        let a = ColoredTreelet::singleton(0);
        let b = ColoredTreelet::singleton(2);
        let mut spill = SpillWriter::create(&dir.path().join("s")).unwrap();
        for v in [3u32, 1, 2] {
            let mut rec = Vec::new();
            let entries = vec![(a.key(), Count::from(v as u64)), (b.key(), Count::from(10u64))];
            encode_record(&entries, false, &mut rec).unwrap();
            spill.append(v, &rec).unwrap();
        }
        let dest = dir.path().join("t.mct");
        spill.flush_and_sort(&hdr, &dest).unwrap();
        assert!(!dir.path().join("s").exists());
        let t = CountTable::open(&dest, None).unwrap();
        assert_eq!(t.header(), &hdr);
        assert!(t.entries(0).unwrap().is_empty());
        assert_eq!(t.entries(2).unwrap(), vec![(a, Count::from(2u64)), (b, Count::from(10u64))]);
        assert_eq!(t.occ_total(3).unwrap(), Count::from(13u64));
        assert_eq!(t.occ(&b, 1).unwrap(), Count::from(10u64));
        assert_eq!(t.occ(&ColoredTreelet::singleton(1), 1).unwrap(), Count::ZERO);
        assert!(t.occ_total(4).is_err());
    }

    #[test]
    fn vlc_and_fixed_decode_identically() {
        let dir = tempfile::tempdir().unwrap();
        let ite = Arc::new(TreeletIndexTables::new(3).unwrap());
        let ts: Vec<ColoredTreelet> = (0..3).map(ColoredTreelet::singleton).collect();
        let counts = [Count::from(5u64), Count::from(1u128 << 70), Count::from(1u64)];
        let mut fixed = Vec::new();
        let mut packed = Vec::new();
        encode_record(&ts.iter().zip(counts).map(|(t, c)| (t.key(), c)).collect::<Vec<_>>(), false, &mut fixed).unwrap();
        encode_record(
            &ts.iter().zip(counts).map(|(t, c)| (ite.to_code(t).unwrap() as u64, c)).collect::<Vec<_>>(),
            true,
            &mut packed,
        )
        .unwrap();
        let pf = dir.path().join("f");
        let pv = dir.path().join("v");
        write_table(&pf, &header(1, false), |_| &fixed).unwrap();
        write_table(&pv, &header(1, true), |_| &packed).unwrap();
        let tf = CountTable::open(&pf, None).unwrap();
        let tv = CountTable::open(&pv, Some(ite)).unwrap();
        assert_eq!(tf.entries(0).unwrap(), tv.entries(0).unwrap());
        assert_eq!(tf.occ_total(0).unwrap(), tv.occ_total(0).unwrap());
        assert!(packed.len() < fixed.len());
    }

    #[test]
    fn corruption_is_detected() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("t");
        let rec = Vec::new();
        write_table(&p, &header(2, false), |_| &rec).unwrap();
        let mut bytes = fs::read(&p).unwrap();
        bytes[10] ^= 1;
        fs::write(&p, bytes).unwrap();
        assert!(matches!(CountTable::open(&p, None), Err(Error::Checksum(_))));
    }

    #[test]
    fn fixed_width_rejects_counts_beyond_128_bits() {
        let mut out = Vec::new();
        let big = Count::from(1u64) << 130;
        assert!(matches!(encode_record(&[(1, big)], false, &mut out), Err(Error::Overflow(_))));
    }
}
