//! Capped all-pairs shortest paths on unweighted graphs.
//!
//! Distances beyond the cap and unreachable pairs both hold the sentinel,
//! which defaults to `n + 1` (no simple path is that long).

use std::collections::VecDeque;
use std::io::{Read, Write};

use serde::Serialize;

use crate::error::{Error, Result};
use crate::graph::SparseGraph;
use crate::par;
use crate::sbm::Labeling;

/// Entries are 16 bits wide when the sentinel fits below this bound.
pub const NARROW_LIMIT: u64 = 1 << 15;

/// `ceil(cap_factor * ln n)`, clamped to `[1, n]`. Distances in an
/// `n`-vertex graph never exceed `n - 1`, so the clamp changes nothing but
/// keeps the cap below the sentinel `n + 1`.
pub fn distance_cap(n: usize, cap_factor: f64) -> u32 {
    let raw = (cap_factor * (n.max(1) as f64).ln()).ceil();
    let top = n.clamp(1, u32::MAX as usize - 1) as f64;
    if raw.is_finite() && raw >= 1.0 {
        raw.min(top) as u32
    } else {
        1
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
enum Storage {
    Narrow(Vec<u16>),
    Wide(Vec<u32>),
}

/// Dense symmetric matrix of capped geodesic distances.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DistanceMatrix {
    n: usize,
    cap: u32,
    sentinel: u32,
    storage: Storage,
}

/// Entry type of a distance row.
pub trait DistanceEntry: Copy + Send + Sync + 'static {
    fn from_u32(v: u32) -> Self;
    fn to_u32(self) -> u32;
    fn to_f64(self) -> f64;
}

impl DistanceEntry for u16 {
    #[inline]
    fn from_u32(v: u32) -> Self {
        v as u16
    }
    #[inline]
    fn to_u32(self) -> u32 {
        u32::from(self)
    }
    #[inline]
    fn to_f64(self) -> f64 {
        f64::from(self)
    }
}

impl DistanceEntry for u32 {
    #[inline]
    fn from_u32(v: u32) -> Self {
        v
    }
    #[inline]
    fn to_u32(self) -> u32 {
        self
    }
    #[inline]
    fn to_f64(self) -> f64 {
        f64::from(self)
    }
}

/// Borrowed view of the entries at their stored width.
pub enum DistanceRows<'a> {
    Narrow(&'a [u16]),
    Wide(&'a [u32]),
}

impl DistanceMatrix {
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn cap(&self) -> u32 {
        self.cap
    }

    pub fn sentinel(&self) -> u32 {
        self.sentinel
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> u32 {
        let idx = i * self.n + j;
        match &self.storage {
            Storage::Narrow(v) => u32::from(v[idx]),
            Storage::Wide(v) => v[idx],
        }
    }

    #[inline]
    pub fn is_finite(&self, i: usize, j: usize) -> bool {
        self.get(i, j) != self.sentinel
    }

    pub fn entries(&self) -> DistanceRows<'_> {
        match &self.storage {
            Storage::Narrow(v) => DistanceRows::Narrow(v),
            Storage::Wide(v) => DistanceRows::Wide(v),
        }
    }

    /// Bytes per stored entry.
    pub fn width(&self) -> usize {
        match self.storage {
            Storage::Narrow(_) => 2,
            Storage::Wide(_) => 4,
        }
    }

    /// Builds a matrix from row-major entries, validating shape, symmetry and
    /// the zero diagonal.
    pub fn from_entries(n: usize, cap: u32, sentinel: u32, entries: &[u32]) -> Result<Self> {
        if entries.len() != n * n {
            return Err(Error::DimensionMismatch {
                expected: n * n,
                got: entries.len(),
            });
        }
        for i in 0..n {
            if entries[i * n + i] != 0 {
                return Err(Error::InvalidParameter(format!("nonzero diagonal at {i}")));
            }
            for j in 0..i {
                if entries[i * n + j] != entries[j * n + i] {
                    return Err(Error::InvalidParameter(format!("asymmetric entry ({i}, {j})")));
                }
            }
        }
        let storage = if u64::from(sentinel) < NARROW_LIMIT && entries.iter().all(|&e| u64::from(e) < NARROW_LIMIT) {
            Storage::Narrow(entries.iter().map(|&e| e as u16).collect())
        } else {
            Storage::Wide(entries.to_vec())
        };
        Ok(Self {
            n,
            cap,
            sentinel,
            storage,
        })
    }

    /// Principal submatrix on `indices`, in the given order.
    pub fn restrict(&self, indices: &[usize]) -> DistanceMatrix {
        let m = indices.len();
        let mut out = Vec::with_capacity(m * m);
        for &i in indices {
            for &j in indices {
                out.push(self.get(i, j));
            }
        }
        Self::from_entries(m, self.cap, self.sentinel, &out).expect("principal submatrix of a valid matrix")
    }

    /// Little-endian dump: `n`, `cap`, `sentinel` as u64, then row-major
    /// entries, 2 bytes each when `sentinel < 2^15`, else 4.
    pub fn write_binary<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        w.write_all(&(self.n as u64).to_le_bytes())?;
        w.write_all(&u64::from(self.cap).to_le_bytes())?;
        w.write_all(&u64::from(self.sentinel).to_le_bytes())?;
        let narrow = u64::from(self.sentinel) < NARROW_LIMIT;
        let mut buf = Vec::with_capacity(self.n * if narrow { 2 } else { 4 });
        for i in 0..self.n {
            buf.clear();
            for j in 0..self.n {
                let v = self.get(i, j);
                if narrow {
                    buf.extend_from_slice(&(v as u16).to_le_bytes());
                } else {
                    buf.extend_from_slice(&v.to_le_bytes());
                }
            }
            w.write_all(&buf)?;
        }
        Ok(())
    }

    pub fn read_binary<R: Read>(mut r: R) -> Result<Self> {
        let mut word = [0u8; 8];
        let mut header = [0u64; 3];
        for h in header.iter_mut() {
            r.read_exact(&mut word)?;
            *h = u64::from_le_bytes(word);
        }
        let [n, cap, sentinel] = header;
        let (n, cap, sentinel) = (
            usize::try_from(n).map_err(|_| Error::InvalidParameter("matrix too large".into()))?,
            u32::try_from(cap).map_err(|_| Error::InvalidParameter("cap exceeds u32".into()))?,
            u32::try_from(sentinel).map_err(|_| Error::InvalidParameter("sentinel exceeds u32".into()))?,
        );
        let narrow = u64::from(sentinel) < NARROW_LIMIT;
        let width = if narrow { 2 } else { 4 };
        let mut raw = vec![0u8; n * n * width];
        r.read_exact(&mut raw)?;
        let entries: Vec<u32> = if narrow {
            raw.chunks_exact(2).map(|c| u32::from(u16::from_le_bytes([c[0], c[1]]))).collect()
        } else {
            raw.chunks_exact(4).map(|c| u32::from_le_bytes([c[0], c[1], c[2], c[3]])).collect()
        };
        Self::from_entries(n, cap, sentinel, &entries)
    }

    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        let mut line = String::new();
        for i in 0..self.n {
            line.clear();
            for j in 0..self.n {
                if j > 0 {
                    line.push(',');
                }
                line.push_str(&self.get(i, j).to_string());
            }
            line.push('\n');
            w.write_all(line.as_bytes())?;
        }
        Ok(())
    }
}

/// Breadth-first distances from `src`, capped. `out` must have length `n`.
pub fn bfs_row<T: DistanceEntry>(
    g: &SparseGraph,
    src: usize,
    cap: u32,
    sentinel: u32,
    queue: &mut VecDeque<usize>,
    out: &mut [T],
) {
    let fill = T::from_u32(sentinel);
    out.iter_mut().for_each(|e| *e = fill);
    out[src] = T::from_u32(0);
    queue.clear();
    queue.push_back(src);
    while let Some(u) = queue.pop_front() {
        let du = out[u].to_u32();
        if du >= cap {
            continue;
        }
        let next = T::from_u32(du + 1);
        for &v in g.neighbors(u) {
            let v = v as usize;
            if out[v].to_u32() == sentinel && v != src {
                out[v] = next;
                queue.push_back(v);
            }
        }
    }
}

/// All-pairs capped distances with sentinel `n + 1`.
pub fn apsp(g: &SparseGraph, cap_factor: f64) -> DistanceMatrix {
    let n = g.n();
    apsp_with(g, distance_cap(n, cap_factor), n as u32 + 1)
}

/// All-pairs capped distances with an explicit cap and sentinel. The
/// sentinel must exceed the cap.
pub fn apsp_with(g: &SparseGraph, cap: u32, sentinel: u32) -> DistanceMatrix {
    assert!(sentinel > cap, "sentinel {sentinel} must exceed cap {cap}");
    let n = g.n();
    let storage = if u64::from(sentinel) < NARROW_LIMIT {
        Storage::Narrow(fill_rows::<u16>(g, cap, sentinel))
    } else {
        Storage::Wide(fill_rows::<u32>(g, cap, sentinel))
    };
    DistanceMatrix {
        n,
        cap,
        sentinel,
        storage,
    }
}

fn fill_rows<T: DistanceEntry>(g: &SparseGraph, cap: u32, sentinel: u32) -> Vec<T> {
    let n = g.n();
    let mut data = vec![T::from_u32(sentinel); n * n];
    par::for_each_row_mut(&mut data, n, |src, row| {
        let mut queue = VecDeque::with_capacity(64);
        bfs_row(g, src, cap, sentinel, &mut queue, row);
    });
    data
}

/// Mean, variance and count of the finite distances over one unordered
/// block pair.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PairStats {
    pub mean: f64,
    pub variance: f64,
    pub count: u64,
}

/// Statistics of finite entries `i < j`, grouped by the unordered label pair
/// `{label(i), label(j)}`. Entry `[a][b]` with `a <= b` is filled and mirrored.
pub fn distance_stats(d: &DistanceMatrix, labels: &Labeling) -> Result<Vec<Vec<PairStats>>> {
    if labels.len() != d.n() {
        return Err(Error::DimensionMismatch {
            expected: d.n(),
            got: labels.len(),
        });
    }
    let k = labels.k();
    let mut hist = PairHistograms::new(k, d.cap());
    for i in 0..d.n() {
        let a = labels.get(i);
        for j in (i + 1)..d.n() {
            hist.record(a, labels.get(j), d.get(i, j), d.sentinel());
        }
    }
    Ok(hist.stats())
}

/// Distance histograms per unordered block pair, over unordered vertex pairs.
/// Bucket `t` counts pairs at distance `t` (`1..=cap`); `beyond` counts
/// sentinel entries.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct PairHistograms {
    k: usize,
    cap: u32,
    counts: Vec<Vec<u64>>,
    beyond: Vec<u64>,
}

impl PairHistograms {
    pub fn new(k: usize, cap: u32) -> Self {
        Self {
            k,
            cap,
            counts: vec![vec![0; cap as usize + 1]; k * k],
            beyond: vec![0; k * k],
        }
    }

    fn slot(&self, a: usize, b: usize) -> usize {
        let (a, b) = if a <= b { (a, b) } else { (b, a) };
        a * self.k + b
    }

    #[inline]
    pub fn record(&mut self, a: usize, b: usize, dist: u32, sentinel: u32) {
        let s = self.slot(a, b);
        if dist == sentinel || dist > self.cap {
            self.beyond[s] += 1;
        } else {
            self.counts[s][dist as usize] += 1;
        }
    }

    pub fn merge(&mut self, other: &PairHistograms) {
        for (mine, theirs) in self.counts.iter_mut().zip(&other.counts) {
            for (m, t) in mine.iter_mut().zip(theirs) {
                *m += t;
            }
        }
        for (m, t) in self.beyond.iter_mut().zip(&other.beyond) {
            *m += t;
        }
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn cap(&self) -> u32 {
        self.cap
    }

    /// Counts per finite distance for the pair `{a, b}`.
    pub fn histogram(&self, a: usize, b: usize) -> &[u64] {
        &self.counts[self.slot(a, b)]
    }

    pub fn beyond(&self, a: usize, b: usize) -> u64 {
        self.beyond[self.slot(a, b)]
    }

    /// Histogram summed over same-block pairs (`within = true`) or over
    /// cross-block pairs.
    pub fn pooled(&self, within: bool) -> (Vec<u64>, u64) {
        let mut counts = vec![0u64; self.cap as usize + 1];
        let mut beyond = 0;
        for a in 0..self.k {
            for b in a..self.k {
                if (a == b) != within {
                    continue;
                }
                for (c, &v) in counts.iter_mut().zip(self.histogram(a, b)) {
                    *c += v;
                }
                beyond += self.beyond(a, b);
            }
        }
        (counts, beyond)
    }

    pub fn stats(&self) -> Vec<Vec<PairStats>> {
        let mut out = vec![
            vec![
                PairStats {
                    mean: f64::NAN,
                    variance: f64::NAN,
                    count: 0
                };
                self.k
            ];
            self.k
        ];
        for a in 0..self.k {
            for b in a..self.k {
                let s = histogram_stats(self.histogram(a, b));
                out[a][b] = s;
                out[b][a] = s;
            }
        }
        out
    }
}

/// Mean and population variance of a histogram indexed by value.
pub fn histogram_stats(counts: &[u64]) -> PairStats {
    let (mut n, mut s1, mut s2) = (0u64, 0u128, 0u128);
    for (t, &c) in counts.iter().enumerate() {
        n += c;
        s1 += c as u128 * t as u128;
        s2 += c as u128 * (t * t) as u128;
    }
    if n == 0 {
        return PairStats {
            mean: f64::NAN,
            variance: f64::NAN,
            count: 0,
        };
    }
    let mean = s1 as f64 / n as f64;
    let variance = (s2 as f64 / n as f64 - mean * mean).max(0.0);
    PairStats {
        mean,
        variance,
        count: n,
    }
}

/// Per-block-pair distance histograms computed one BFS at a time, without
/// materialising the matrix.
pub fn pair_histograms(g: &SparseGraph, labels: &Labeling, cap: u32, sentinel: u32) -> Result<PairHistograms> {
    if labels.len() != g.n() {
        return Err(Error::DimensionMismatch {
            expected: g.n(),
            got: labels.len(),
        });
    }
    let n = g.n();
    let k = labels.k();
    const CHUNK: usize = 64;
    let chunks = n.div_ceil(CHUNK);
    let partial = par::map_indexed(chunks, |c| {
        let mut hist = PairHistograms::new(k, cap);
        let mut row = vec![0u32; n];
        let mut queue = VecDeque::with_capacity(64);
        for src in (c * CHUNK)..((c + 1) * CHUNK).min(n) {
            bfs_row(g, src, cap, sentinel, &mut queue, &mut row);
            let a = labels.get(src);
            for (j, &d) in row.iter().enumerate().skip(src + 1) {
                hist.record(a, labels.get(j), d, sentinel);
            }
        }
        hist
    });
    let mut total = PairHistograms::new(k, cap);
    for h in &partial {
        total.merge(h);
    }
    Ok(total)
}
