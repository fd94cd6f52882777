//! Classical-MDS normalization of a distance matrix and its leading
//! eigenvectors.

use std::io::Write;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::geodesic::{DistanceEntry, DistanceMatrix, DistanceRows};
use crate::linalg::{self, EigenOptions, EigenPairs, SymmetricOperator, Which, ROW_CHUNK};
use crate::par;

/// How sentinel entries enter the normalized matrix.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SentinelPolicy {
    /// Use the sentinel value as an ordinary distance.
    #[default]
    Keep,
    /// Replace sentinels by the distance cap.
    Clamp,
}

impl SentinelPolicy {
    fn value(self, d: &DistanceMatrix) -> f64 {
        match self {
            SentinelPolicy::Keep => f64::from(d.sentinel()),
            SentinelPolicy::Clamp => f64::from(d.cap()),
        }
    }
}

/// `sum_j lut[d_ij] x_j`.
fn weighted_row_sum<T: DistanceEntry>(row: &[T], lut: &[f64], x: &[f64]) -> f64 {
    let mut acc = [0.0; 4];
    let mut rows = row.chunks_exact(4);
    let mut xs = x.chunks_exact(4);
    for (r, v) in (&mut rows).zip(&mut xs) {
        for l in 0..4 {
            acc[l] += lut[r[l].to_u32() as usize] * v[l];
        }
    }
    let tail: f64 = rows.remainder().iter().zip(xs.remainder()).map(|(&e, &xj)| lut[e.to_u32() as usize] * xj).sum();
    (acc[0] + acc[1]) + (acc[2] + acc[3]) + tail
}

/// Value of every possible entry, squared or not, with sentinels replaced.
fn entry_table(d: &DistanceMatrix, sentinel_value: f64, square: bool) -> Vec<f64> {
    (0..=d.sentinel())
        .map(|e| {
            let v = if e == d.sentinel() { sentinel_value } else { f64::from(e) };
            if square {
                v * v
            } else {
                v
            }
        })
        .collect()
}

fn distance_matvec(d: &DistanceMatrix, lut: &[f64], x: &[f64], y: &mut [f64]) {
    let n = d.n();
    par::for_each_row_mut(y, ROW_CHUNK, |c, out| {
        for (r, yi) in out.iter_mut().enumerate() {
            let i = c * ROW_CHUNK + r;
            *yi = match d.entries() {
                DistanceRows::Narrow(v) => weighted_row_sum(&v[i * n..(i + 1) * n], lut, x),
                DistanceRows::Wide(v) => weighted_row_sum(&v[i * n..(i + 1) * n], lut, x),
            };
        }
    });
}

/// `-J S J` with `J = I - 1 1^T / n` and `S` the entrywise square of the
/// distances, kept implicit: only the distance matrix, the row means of `S`
/// and its grand mean are stored.
#[derive(Debug, Clone)]
pub struct CenteredMatrix {
    d: DistanceMatrix,
    /// Squared value of every possible entry.
    squares: Vec<f64>,
    row_means: Vec<f64>,
    grand_mean: f64,
}

impl CenteredMatrix {
    pub fn n(&self) -> usize {
        self.d.n()
    }

    #[inline]
    fn squared(&self, i: usize, j: usize) -> f64 {
        self.squares[self.d.get(i, j) as usize]
    }

    pub fn entry(&self, i: usize, j: usize) -> f64 {
        -(self.squared(i, j) - self.row_means[i] - self.row_means[j] + self.grand_mean)
    }

    pub fn distances(&self) -> &DistanceMatrix {
        &self.d
    }
}

impl SymmetricOperator for CenteredMatrix {
    fn dim(&self) -> usize {
        self.d.n()
    }

    fn apply(&self, x: &[f64], y: &mut [f64]) {
        distance_matvec(&self.d, &self.squares, x, y);
        let sum_x: f64 = x.iter().sum();
        let r_dot_x: f64 = self.row_means.iter().zip(x).map(|(r, v)| r * v).sum();
        for (yi, ri) in y.iter_mut().zip(&self.row_means) {
            *yi = -(*yi - r_dot_x - ri * sum_x + self.grand_mean * sum_x);
        }
    }

    fn to_dense(&self) -> DMatrix<f64> {
        let n = self.n();
        DMatrix::from_fn(n, n, |i, j| self.entry(i, j))
    }
}

/// Double centering of the squared distances.
pub fn double_center(d: DistanceMatrix) -> Result<CenteredMatrix> {
    double_center_with(d, SentinelPolicy::Keep)
}

pub fn double_center_with(d: DistanceMatrix, policy: SentinelPolicy) -> Result<CenteredMatrix> {
    let n = d.n();
    if n < 2 {
        return Err(invalid(format!("double centering needs at least 2 points, got {n}")));
    }
    let sentinel_value = policy.value(&d);
    let squares = entry_table(&d, sentinel_value, true);
    let ones = vec![1.0; n];
    let mut row_sums = vec![0.0; n];
    distance_matvec(&d, &squares, &ones, &mut row_sums);
    let row_means: Vec<f64> = row_sums.iter().map(|s| s / n as f64).collect();
    let grand_mean = row_means.iter().sum::<f64>() / n as f64;
    Ok(CenteredMatrix {
        d,
        squares,
        row_means,
        grand_mean,
    })
}

/// Distances divided by `ln n` without centering.
#[derive(Debug, Clone)]
pub struct ScaledDistances {
    d: DistanceMatrix,
    values: Vec<f64>,
}

impl ScaledDistances {
    pub fn new(d: DistanceMatrix, log_n: f64, policy: SentinelPolicy) -> Result<Self> {
        if !(log_n > 0.0) {
            return Err(invalid("log scale must be positive"));
        }
        let values = entry_table(&d, policy.value(&d), false).into_iter().map(|v| v / log_n).collect();
        Ok(Self { d, values })
    }
}

impl SymmetricOperator for ScaledDistances {
    fn dim(&self) -> usize {
        self.d.n()
    }

    fn apply(&self, x: &[f64], y: &mut [f64]) {
        distance_matvec(&self.d, &self.values, x, y);
    }
}

/// Leading eigenvectors as rows of an `n x k` matrix, with their
/// eigenvalues in descending absolute order.
#[derive(Debug, Clone)]
pub struct Embedding {
    pub rows: DMatrix<f64>,
    pub eigenvalues: Vec<f64>,
    pub converged: bool,
}

impl Embedding {
    pub fn n(&self) -> usize {
        self.rows.nrows()
    }

    pub fn k(&self) -> usize {
        self.rows.ncols()
    }

    pub fn row(&self, i: usize) -> Vec<f64> {
        self.rows.row(i).iter().copied().collect()
    }

    /// CSV with one row per vertex, preceded by `# eigenvalues: ...`.
    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        let vals: Vec<String> = self.eigenvalues.iter().map(|v| format!("{v:.17e}")).collect();
        writeln!(w, "# eigenvalues: {}", vals.join(","))?;
        for i in 0..self.n() {
            let row: Vec<String> = self.rows.row(i).iter().map(|v| format!("{v:.17e}")).collect();
            writeln!(w, "{}", row.join(","))?;
        }
        Ok(())
    }
}

/// Top `k` eigenpairs of a symmetric matrix by absolute eigenvalue.
pub fn top_k_eigen(m: &DMatrix<f64>, k: usize) -> Result<(Vec<f64>, DMatrix<f64>)> {
    let pairs = linalg::top_k(m, k, Which::LargestMagnitude, &EigenOptions::default())?;
    Ok((pairs.values, pairs.vectors))
}

pub fn spectral_embed<O: SymmetricOperator + ?Sized>(op: &O, k: usize) -> Result<Embedding> {
    spectral_embed_with(op, k, &EigenOptions::default())
}

pub fn spectral_embed_with<O: SymmetricOperator + ?Sized>(op: &O, k: usize, opts: &EigenOptions) -> Result<Embedding> {
    let EigenPairs {
        values,
        vectors,
        converged,
        ..
    } = linalg::top_k(op, k, Which::LargestMagnitude, opts)?;
    Ok(Embedding {
        rows: vectors,
        eigenvalues: values,
        converged,
    })
}
