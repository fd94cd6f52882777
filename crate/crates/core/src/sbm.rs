//! Stochastic block model parameters and sampling.

use std::collections::HashSet;
use std::io::{BufRead, Write};

use nalgebra::DMatrix;
use rand::Rng;
use rand_distr::{Binomial, Distribution};
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::graph::SparseGraph;
use crate::par;
use crate::rng::substream;

/// Generative description of a block model: `k` blocks with prior `pi`,
/// symmetric kernel `kernel`, density scale `rho_n` and `n` vertices.
///
/// The connection probability between blocks `a` and `b` is
/// `min(rho_n * kernel[a][b], 1)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BlockModelParams {
    pi: Vec<f64>,
    kernel: Vec<f64>,
    rho_n: f64,
    n: usize,
}

impl BlockModelParams {
    /// `kernel` is row-major `k x k` with `k = pi.len()`.
    pub fn new(pi: Vec<f64>, kernel: Vec<f64>, rho_n: f64, n: usize) -> Result<Self> {
        let k = pi.len();
        if k == 0 {
            return Err(invalid("block count must be at least 1"));
        }
        if kernel.len() != k * k {
            return Err(Error::DimensionMismatch {
                expected: k * k,
                got: kernel.len(),
            });
        }
        if pi.iter().any(|&p| !(p > 0.0) || !p.is_finite()) {
            return Err(invalid("block priors must be positive"));
        }
        let total: f64 = pi.iter().sum();
        if (total - 1.0).abs() > 1e-12 {
            return Err(invalid(format!("block priors sum to {total}, not 1")));
        }
        for a in 0..k {
            for b in 0..k {
                let v = kernel[a * k + b];
                if !(v >= 0.0) || !v.is_finite() {
                    return Err(invalid(format!("kernel entry ({a}, {b}) = {v} is not a nonnegative number")));
                }
                if v != kernel[b * k + a] {
                    return Err(invalid(format!("kernel is not symmetric at ({a}, {b})")));
                }
            }
        }
        if !(rho_n >= 0.0) || !rho_n.is_finite() {
            return Err(invalid(format!("density scale {rho_n} must be nonnegative")));
        }
        Ok(Self { pi, kernel, rho_n, n })
    }

    /// Symmetric planted partition in the sparse scaling `rho_n = 1/n` with
    /// uniform priors.
    pub fn planted_partition(n: usize, k: usize, p: f64, q: f64) -> Result<Self> {
        let kernel = planted_partition_kernel(p, q, k)?;
        let rho = if n == 0 { 0.0 } else { 1.0 / n as f64 };
        Self::new(vec![1.0 / k as f64; k], kernel.as_slice().to_vec(), rho, n)
    }

    pub fn k(&self) -> usize {
        self.pi.len()
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn pi(&self) -> &[f64] {
        &self.pi
    }

    pub fn rho_n(&self) -> f64 {
        self.rho_n
    }

    pub fn kernel_entry(&self, a: usize, b: usize) -> f64 {
        self.kernel[a * self.k() + b]
    }

    pub fn kernel(&self) -> DMatrix<f64> {
        DMatrix::from_row_slice(self.k(), self.k(), &self.kernel)
    }

    /// Effective connection probability between blocks `a` and `b`.
    pub fn connection_probability(&self, a: usize, b: usize) -> f64 {
        (self.rho_n * self.kernel_entry(a, b)).min(1.0)
    }

    pub fn with_n(&self, n: usize) -> Self {
        Self { n, ..self.clone() }
    }
}

/// Kernel `(p - q) I + q 1 1^T`.
pub fn planted_partition_kernel(p: f64, q: f64, k: usize) -> Result<DMatrix<f64>> {
    if k < 1 {
        return Err(invalid("block count must be at least 1"));
    }
    if !(q > 0.0) || !(p > q) {
        return Err(invalid(format!("planted partition needs p > q > 0, got p = {p}, q = {q}")));
    }
    Ok(DMatrix::from_fn(k, k, |a, b| if a == b { p } else { q }))
}

/// Block assignment of each vertex, stored zero-based (`0..k`). The text
/// format writes blocks one-based.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Labeling {
    labels: Vec<usize>,
    k: usize,
}

impl Labeling {
    pub fn new(labels: Vec<usize>, k: usize) -> Result<Self> {
        if k == 0 {
            return Err(invalid("block count must be at least 1"));
        }
        if let Some((i, &l)) = labels.iter().enumerate().find(|(_, &l)| l >= k) {
            return Err(invalid(format!("vertex {i} has block {l} outside 0..{k}")));
        }
        Ok(Self { labels, k })
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn as_slice(&self) -> &[usize] {
        &self.labels
    }

    #[inline]
    pub fn get(&self, i: usize) -> usize {
        self.labels[i]
    }

    /// Vertex count per block.
    pub fn block_sizes(&self) -> Vec<usize> {
        let mut counts = vec![0; self.k];
        for &l in &self.labels {
            counts[l] += 1;
        }
        counts
    }

    /// Labels of the vertices `indices`, in that order.
    pub fn restrict(&self, indices: &[usize]) -> Labeling {
        Labeling {
            labels: indices.iter().map(|&i| self.labels[i]).collect(),
            k: self.k,
        }
    }

    pub fn write<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        for &l in &self.labels {
            writeln!(w, "{}", l + 1)?;
        }
        Ok(())
    }

    /// Reads one-based labels, one per line. `k` defaults to the largest label.
    pub fn read<R: BufRead>(reader: R, k: Option<usize>) -> Result<Self> {
        let mut labels = Vec::new();
        for (idx, line) in reader.lines().enumerate() {
            let line = line?;
            let t = line.trim();
            if t.is_empty() || t.starts_with('#') {
                continue;
            }
            let v: usize = t.parse().map_err(|e| Error::Parse {
                line: idx + 1,
                msg: format!("bad label {t:?}: {e}"),
            })?;
            if v == 0 {
                return Err(Error::Parse {
                    line: idx + 1,
                    msg: "labels are one-based".into(),
                });
            }
            labels.push(v - 1);
        }
        let k = k.unwrap_or_else(|| labels.iter().max().map_or(1, |&m| m + 1));
        Self::new(labels, k)
    }
}

/// Samples a graph and its planted labels.
///
/// Labels are drawn first, independently from `pi`. Then for each block pair
/// the number of edges is drawn from a binomial over the candidate pairs and
/// that many distinct pairs are chosen uniformly, which gives each pair an
/// independent Bernoulli edge at the block-pair probability.
pub fn sample_sbm(params: &BlockModelParams, seed: u64) -> Result<(SparseGraph, Labeling)> {
    let n = params.n();
    if n == 0 {
        return Err(invalid("cannot sample a graph with zero vertices"));
    }
    let k = params.k();
    let mut cumulative: Vec<f64> = params
        .pi()
        .iter()
        .scan(0.0, |acc, &p| {
            *acc += p;
            Some(*acc)
        })
        .collect();
    *cumulative.last_mut().unwrap() = 1.0;

    let mut rng = substream(seed, "sbm-labels", 0);
    let labels: Vec<usize> = (0..n)
        .map(|_| {
            let u: f64 = rng.random();
            cumulative.iter().position(|&c| u < c).unwrap_or(k - 1)
        })
        .collect();
    let labeling = Labeling::new(labels, k)?;

    let mut members: Vec<Vec<usize>> = vec![Vec::new(); k];
    for (v, &l) in labeling.as_slice().iter().enumerate() {
        members[l].push(v);
    }

    let pairs: Vec<(usize, usize)> = (0..k).flat_map(|a| (a..k).map(move |b| (a, b))).collect();
    let per_pair = par::map_indexed(pairs.len(), |idx| {
        let (a, b) = pairs[idx];
        sample_block_pair(params, (a, b), &members[a], &members[b], seed, (a * k + b) as u64)
    });
    let mut edges = Vec::with_capacity(per_pair.iter().map(Vec::len).sum());
    for chunk in per_pair {
        edges.extend(chunk);
    }
    let graph = SparseGraph::from_edges(n, edges)?;
    Ok((graph, labeling))
}

fn sample_block_pair(
    params: &BlockModelParams,
    (a, b): (usize, usize),
    left: &[usize],
    right: &[usize],
    seed: u64,
    pair_index: u64,
) -> Vec<(usize, usize)> {
    let same_block = a == b;
    let p = params.connection_probability(a, b);
    let total: u64 = if same_block {
        let s = left.len() as u64;
        s * s.saturating_sub(1) / 2
    } else {
        left.len() as u64 * right.len() as u64
    };
    if total == 0 || p <= 0.0 {
        return Vec::new();
    }
    let mut rng = substream(seed, "sbm-edges", pair_index);
    let count = if p >= 1.0 {
        total
    } else {
        Binomial::new(total, p)
            .expect("probability in (0, 1)")
            .sample(&mut rng)
    };
    let mut chosen = floyd_sample(total, count, &mut rng);
    chosen.sort_unstable();
    chosen
        .into_iter()
        .map(|idx| {
            if same_block {
                let (i, j) = triangle_decode(idx);
                (left[i as usize], left[j as usize])
            } else {
                let width = right.len() as u64;
                (left[(idx / width) as usize], right[(idx % width) as usize])
            }
        })
        .collect()
}

/// `count` distinct values from `0..total`, uniformly (Floyd's algorithm).
fn floyd_sample<R: Rng>(total: u64, count: u64, rng: &mut R) -> Vec<u64> {
    if count >= total {
        return (0..total).collect();
    }
    let mut set = HashSet::with_capacity(count as usize);
    let mut out = Vec::with_capacity(count as usize);
    for j in (total - count)..total {
        let t = rng.random_range(0..=j);
        let pick = if set.contains(&t) { j } else { t };
        set.insert(pick);
        out.push(pick);
    }
    out
}

/// Inverse of `k = j (j - 1) / 2 + i` for `0 <= i < j`.
fn triangle_decode(k: u64) -> (u64, u64) {
    let mut j = ((1.0 + (1.0 + 8.0 * k as f64).sqrt()) / 2.0).floor() as u64;
    while j * (j - 1) / 2 > k {
        j -= 1;
    }
    while (j + 1) * j / 2 <= k {
        j += 1;
    }
    (k - j * (j - 1) / 2, j)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn kernel_construction() {
        let b = planted_partition_kernel(3.0, 1.0, 2).unwrap();
        assert_eq!(b, DMatrix::from_row_slice(2, 2, &[3.0, 1.0, 1.0, 3.0]));
        let b = planted_partition_kernel(10.0, 2.0, 4).unwrap();
        for a in 0..4 {
            for c in 0..4 {
                assert_eq!(b[(a, c)], if a == c { 10.0 } else { 2.0 });
            }
        }
    }

    #[test]
    fn kernel_rejects_bad_rates() {
        assert!(planted_partition_kernel(2.0, 2.0, 3).is_err());
        assert!(planted_partition_kernel(1.0, 2.0, 3).is_err());
        assert!(planted_partition_kernel(2.0, 1.0, 0).is_err());
    }

    #[test]
    fn params_validation() {
        assert!(BlockModelParams::new(vec![0.5, 0.5], vec![1.0, 2.0, 3.0, 1.0], 0.1, 10).is_err());
        assert!(BlockModelParams::new(vec![0.6, 0.5], vec![1.0; 4], 0.1, 10).is_err());
        assert!(BlockModelParams::new(vec![1.0, 0.0], vec![1.0; 4], 0.1, 10).is_err());
        assert!(BlockModelParams::new(vec![0.5, 0.5], vec![1.0; 3], 0.1, 10).is_err());
        assert!(BlockModelParams::new(vec![0.5, 0.5], vec![1.0; 4], 0.1, 10).is_ok());
    }

    #[test]
    fn triangle_decode_enumerates_pairs() {
        let mut k = 0;
        for j in 1..60u64 {
            for i in 0..j {
                assert_eq!(triangle_decode(k), (i, j));
                k += 1;
            }
        }
    }

    #[test]
    fn zero_vertices_is_error() {
        let p = BlockModelParams::new(vec![1.0], vec![1.0], 0.5, 0).unwrap();
        assert!(sample_sbm(&p, 0).is_err());
    }

    #[test]
    fn clamped_probability_forces_edge() {
        let n = 2;
        let p = BlockModelParams::new(vec![1.0], vec![2.0 * n as f64], 1.0 / n as f64, n).unwrap();
        assert_eq!(p.connection_probability(0, 0), 1.0);
        for seed in 0..10 {
            let (g, _) = sample_sbm(&p, seed).unwrap();
            assert_eq!(g.m(), 1);
        }
    }

    #[test]
    fn same_seed_same_graph() {
        let p = BlockModelParams::planted_partition(500, 3, 9.0, 2.0).unwrap();
        let (g1, l1) = sample_sbm(&p, 42).unwrap();
        let (g2, l2) = sample_sbm(&p, 42).unwrap();
        let (g3, _) = sample_sbm(&p, 43).unwrap();
        assert_eq!(g1, g2);
        assert_eq!(l1, l2);
        assert_ne!(g1, g3);
    }

    #[test]
    fn labels_round_trip() {
        let l = Labeling::new(vec![0, 2, 1, 1], 3).unwrap();
        let mut buf = Vec::new();
        l.write(&mut buf).unwrap();
        assert_eq!(String::from_utf8(buf.clone()).unwrap(), "1\n3\n2\n2\n");
        assert_eq!(Labeling::read(buf.as_slice(), Some(3)).unwrap(), l);
    }

    #[test]
    fn labeling_rejects_out_of_range() {
        assert!(Labeling::new(vec![0, 3], 3).is_err());
        assert!(Labeling::read("0\n".as_bytes(), None).is_err());
    }
}
