//! Row clustering (k-means, diagonal Gaussian mixtures), label alignment
//! and connection-matrix estimation.

use nalgebra::DMatrix;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::graph::SparseGraph;
use crate::par;
use crate::rng::substream;
use crate::sbm::Labeling;

pub const KMEANS_MAX_ITER: usize = 300;
pub const GMM_MAX_ITER: usize = 500;
pub const GMM_TOL: f64 = 1e-8;
pub const VARIANCE_FLOOR: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Clusterer {
    #[default]
    Kmeans,
    Gmm,
}

/// Settings shared by every pipeline that ends in a clustering step.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClusterOptions {
    pub clusterer: Clusterer,
    pub restarts: usize,
    pub seed: u64,
}

impl Default for ClusterOptions {
    fn default() -> Self {
        Self {
            clusterer: Clusterer::Kmeans,
            restarts: 20,
            seed: 0,
        }
    }
}

/// Clusters the rows of `rows` into `k` groups.
pub fn cluster_rows(rows: &DMatrix<f64>, k: usize, opts: &ClusterOptions) -> Result<Labeling> {
    Ok(match opts.clusterer {
        Clusterer::Kmeans => kmeans(rows, k, opts.restarts, opts.seed)?.assignment,
        Clusterer::Gmm => gmm_em(rows, k, opts.restarts, opts.seed)?.assignment,
    })
}

#[derive(Debug, Clone)]
pub struct KMeansResult {
    pub assignment: Labeling,
    /// `k x dim`.
    pub centroids: DMatrix<f64>,
    /// Sum of squared distances from each row to its centroid.
    pub objective: f64,
    pub iterations: usize,
    /// Objective after every assignment step of the winning restart.
    pub trace: Vec<f64>,
    /// Final objective of every restart, by restart index.
    pub restart_objectives: Vec<f64>,
}

#[inline]
fn sq_dist(rows: &DMatrix<f64>, i: usize, centroids: &DMatrix<f64>, c: usize) -> f64 {
    (0..rows.ncols()).map(|d| (rows[(i, d)] - centroids[(c, d)]).powi(2)).sum()
}

fn nearest(rows: &DMatrix<f64>, i: usize, centroids: &DMatrix<f64>) -> (usize, f64) {
    let mut best = (0, f64::INFINITY);
    for c in 0..centroids.nrows() {
        let d = sq_dist(rows, i, centroids, c);
        if d < best.1 {
            best = (c, d);
        }
    }
    best
}

fn distinct_rows(rows: &DMatrix<f64>) -> usize {
    let mut keys: Vec<Vec<u64>> = (0..rows.nrows())
        .map(|i| rows.row(i).iter().map(|v| (v + 0.0).to_bits()).collect())
        .collect();
    keys.sort_unstable();
    keys.dedup();
    keys.len()
}

/// Best-of-`restarts` Lloyd's algorithm with k-means++ seeding.
pub fn kmeans(rows: &DMatrix<f64>, k: usize, restarts: usize, seed: u64) -> Result<KMeansResult> {
    let n = rows.nrows();
    if k == 0 || k > n {
        return Err(invalid(format!("need 1 <= k <= n, got k = {k}, n = {n}")));
    }
    if restarts == 0 {
        return Err(invalid("restarts must be at least 1"));
    }
    if rows.iter().any(|v| !v.is_finite()) {
        return Err(invalid("rows contain non-finite values"));
    }
    let distinct = distinct_rows(rows);
    if distinct < k {
        return Err(Error::DegenerateRows { distinct, k });
    }
    let runs = par::map_indexed(restarts, |r| lloyd(rows, k, &mut substream(seed, "kmeans", r as u64)));
    let restart_objectives: Vec<f64> = runs.iter().map(|r| r.objective).collect();
    let best = restart_objectives
        .iter()
        .enumerate()
        .fold(0, |b, (i, &o)| if o < restart_objectives[b] { i } else { b });
    let run = runs.into_iter().nth(best).expect("at least one restart");
    Ok(KMeansResult {
        assignment: Labeling::new(run.assignment, k)?,
        centroids: run.centroids,
        objective: run.objective,
        iterations: run.iterations,
        trace: run.trace,
        restart_objectives,
    })
}

struct LloydRun {
    assignment: Vec<usize>,
    centroids: DMatrix<f64>,
    objective: f64,
    iterations: usize,
    trace: Vec<f64>,
}

fn plus_plus_init<R: Rng>(rows: &DMatrix<f64>, k: usize, rng: &mut R) -> DMatrix<f64> {
    let (n, dim) = rows.shape();
    let mut centroids = DMatrix::zeros(k, dim);
    let first = rng.random_range(0..n);
    centroids.row_mut(0).copy_from(&rows.row(first));
    let mut d2: Vec<f64> = (0..n).map(|i| sq_dist(rows, i, &centroids, 0)).collect();
    for c in 1..k {
        let total: f64 = d2.iter().sum();
        let pick = if total > 0.0 {
            let target = rng.random::<f64>() * total;
            let mut acc = 0.0;
            let mut idx = n - 1;
            for (i, &w) in d2.iter().enumerate() {
                acc += w;
                if acc > target && w > 0.0 {
                    idx = i;
                    break;
                }
            }
            if d2[idx] == 0.0 {
                d2.iter().position(|&w| w > 0.0).unwrap_or(idx)
            } else {
                idx
            }
        } else {
            rng.random_range(0..n)
        };
        centroids.row_mut(c).copy_from(&rows.row(pick));
        for (i, v) in d2.iter_mut().enumerate() {
            *v = v.min(sq_dist(rows, i, &centroids, c));
        }
    }
    centroids
}

fn lloyd<R: Rng>(rows: &DMatrix<f64>, k: usize, rng: &mut R) -> LloydRun {
    let (n, dim) = rows.shape();
    let mut centroids = plus_plus_init(rows, k, rng);
    let mut assignment = vec![usize::MAX; n];
    let mut trace = Vec::new();
    let mut iterations = 0;
    loop {
        let mut changed = false;
        let mut objective = 0.0;
        let mut cost = vec![0.0; n];
        for i in 0..n {
            let (c, d) = nearest(rows, i, &centroids);
            if assignment[i] != c {
                assignment[i] = c;
                changed = true;
            }
            cost[i] = d;
            objective += d;
        }
        trace.push(objective);
        if !changed || iterations == KMEANS_MAX_ITER {
            return LloydRun {
                assignment,
                centroids,
                objective,
                iterations,
                trace,
            };
        }
        iterations += 1;

        let mut counts = vec![0usize; k];
        for &c in &assignment {
            counts[c] += 1;
        }
        // an empty cluster takes the point farthest from its own centroid
        for c in 0..k {
            if counts[c] > 0 {
                continue;
            }
            let donor = (0..n)
                .filter(|&i| counts[assignment[i]] > 1)
                .fold(None, |best: Option<usize>, i| match best {
                    Some(b) if cost[b] >= cost[i] => Some(b),
                    _ => Some(i),
                });
            if let Some(i) = donor {
                counts[assignment[i]] -= 1;
                assignment[i] = c;
                counts[c] = 1;
                cost[i] = 0.0;
            }
        }
        let mut sums = DMatrix::<f64>::zeros(k, dim);
        for (i, &c) in assignment.iter().enumerate() {
            for d in 0..dim {
                sums[(c, d)] += rows[(i, d)];
            }
        }
        for c in 0..k {
            if counts[c] > 0 {
                for d in 0..dim {
                    centroids[(c, d)] = sums[(c, d)] / counts[c] as f64;
                }
            }
        }
    }
}

#[derive(Debug, Clone)]
pub struct GmmResult {
    pub assignment: Labeling,
    pub weights: Vec<f64>,
    /// `k x dim`.
    pub means: DMatrix<f64>,
    /// `k x dim` per-coordinate variances.
    pub variances: DMatrix<f64>,
    pub log_likelihood: f64,
    pub iterations: usize,
    pub trace: Vec<f64>,
}

/// EM for a diagonal-covariance Gaussian mixture, started from the k-means
/// partition.
pub fn gmm_em(rows: &DMatrix<f64>, k: usize, restarts: usize, seed: u64) -> Result<GmmResult> {
    let km = kmeans(rows, k, restarts, seed)?;
    let (n, dim) = rows.shape();

    // initial responsibilities are the hard k-means partition
    let mut resp = DMatrix::zeros(n, k);
    for (i, &c) in km.assignment.as_slice().iter().enumerate() {
        resp[(i, c)] = 1.0;
    }
    let mut weights = vec![0.0; k];
    let mut means = DMatrix::zeros(k, dim);
    let mut variances = DMatrix::zeros(k, dim);
    m_step(rows, &resp, &mut weights, &mut means, &mut variances);

    let mut trace = Vec::new();
    let mut iterations = 0;
    let mut ll = e_step(rows, &weights, &means, &variances, &mut resp);
    trace.push(ll);
    while iterations < GMM_MAX_ITER {
        m_step(rows, &resp, &mut weights, &mut means, &mut variances);
        let next = e_step(rows, &weights, &means, &variances, &mut resp);
        iterations += 1;
        trace.push(next);
        let gain = next - ll;
        ll = next;
        if gain < GMM_TOL {
            break;
        }
    }
    let labels = (0..n)
        .map(|i| {
            (0..k).fold(0, |b, c| if resp[(i, c)] > resp[(i, b)] { c } else { b })
        })
        .collect();
    Ok(GmmResult {
        assignment: Labeling::new(labels, k)?,
        weights,
        means,
        variances,
        log_likelihood: ll,
        iterations,
        trace,
    })
}

fn m_step(rows: &DMatrix<f64>, resp: &DMatrix<f64>, weights: &mut [f64], means: &mut DMatrix<f64>, variances: &mut DMatrix<f64>) {
    let (n, dim) = rows.shape();
    for c in 0..weights.len() {
        let nk: f64 = resp.column(c).sum();
        weights[c] = nk / n as f64;
        if nk <= 0.0 {
            continue;
        }
        for d in 0..dim {
            let mu = (0..n).map(|i| resp[(i, c)] * rows[(i, d)]).sum::<f64>() / nk;
            let var = (0..n).map(|i| resp[(i, c)] * (rows[(i, d)] - mu).powi(2)).sum::<f64>() / nk;
            means[(c, d)] = mu;
            variances[(c, d)] = var.max(VARIANCE_FLOOR);
        }
    }
}

/// Fills responsibilities and returns the log-likelihood.
fn e_step(rows: &DMatrix<f64>, weights: &[f64], means: &DMatrix<f64>, variances: &DMatrix<f64>, resp: &mut DMatrix<f64>) -> f64 {
    let (n, dim) = rows.shape();
    let k = weights.len();
    let ln_2pi = (2.0 * std::f64::consts::PI).ln();
    let mut ll = 0.0;
    let mut logp = vec![0.0; k];
    for i in 0..n {
        for c in 0..k {
            logp[c] = if weights[c] > 0.0 {
                let mut s = weights[c].ln();
                for d in 0..dim {
                    let v = variances[(c, d)];
                    s -= 0.5 * (ln_2pi + v.ln() + (rows[(i, d)] - means[(c, d)]).powi(2) / v);
                }
                s
            } else {
                f64::NEG_INFINITY
            };
        }
        let mx = logp.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let lse = mx + logp.iter().map(|l| (l - mx).exp()).sum::<f64>().ln();
        for c in 0..k {
            resp[(i, c)] = (logp[c] - lse).exp();
        }
        ll += lse;
    }
    ll
}

/// `counts[p][t]`: vertices with predicted block `p` and true block `t`.
pub fn confusion_matrix(truth: &Labeling, pred: &Labeling) -> Result<Vec<Vec<u64>>> {
    if truth.len() != pred.len() {
        return Err(Error::DimensionMismatch {
            expected: truth.len(),
            got: pred.len(),
        });
    }
    let k = truth.k().max(pred.k());
    let mut c = vec![vec![0u64; k]; k];
    for (&t, &p) in truth.as_slice().iter().zip(pred.as_slice()) {
        c[p][t] += 1;
    }
    Ok(c)
}

/// Maximum of `sum_p counts[p][perm[p]]` over all permutations, by enumeration.
pub fn best_alignment_exhaustive(counts: &[Vec<u64>]) -> (u64, Vec<usize>) {
    let k = counts.len();
    let mut perm: Vec<usize> = (0..k).collect();
    let score = |p: &[usize]| p.iter().enumerate().map(|(r, &c)| counts[r][c]).sum::<u64>();
    let mut best = (score(&perm), perm.clone());
    // Heap's algorithm
    let mut stack = vec![0usize; k];
    let mut i = 1;
    while i < k {
        if stack[i] < i {
            if i % 2 == 0 {
                perm.swap(0, i);
            } else {
                perm.swap(stack[i], i);
            }
            let s = score(&perm);
            if s > best.0 {
                best = (s, perm.clone());
            }
            stack[i] += 1;
            i = 1;
        } else {
            stack[i] = 0;
            i += 1;
        }
    }
    best
}

/// Same as [`best_alignment_exhaustive`] via the Hungarian method, `O(k^3)`.
pub fn best_alignment_hungarian(counts: &[Vec<u64>]) -> (u64, Vec<usize>) {
    let k = counts.len();
    if k == 0 {
        return (0, Vec::new());
    }
    let top = counts.iter().flatten().copied().max().unwrap_or(0) as i64;
    // minimize top - counts; rows and columns are 1-based inside
    let cost = |r: usize, c: usize| top - counts[r - 1][c - 1] as i64;
    let mut u = vec![0i64; k + 1];
    let mut v = vec![0i64; k + 1];
    let mut owner = vec![0usize; k + 1];
    let mut way = vec![0usize; k + 1];
    for r in 1..=k {
        owner[0] = r;
        let mut col = 0;
        let mut minv = vec![i64::MAX; k + 1];
        let mut used = vec![false; k + 1];
        loop {
            used[col] = true;
            let row = owner[col];
            let mut delta = i64::MAX;
            let mut next = 0;
            for c in 1..=k {
                if used[c] {
                    continue;
                }
                let cur = cost(row, c) - u[row] - v[c];
                if cur < minv[c] {
                    minv[c] = cur;
                    way[c] = col;
                }
                if minv[c] < delta {
                    delta = minv[c];
                    next = c;
                }
            }
            for c in 0..=k {
                if used[c] {
                    u[owner[c]] += delta;
                    v[c] -= delta;
                } else {
                    minv[c] -= delta;
                }
            }
            col = next;
            if owner[col] == 0 {
                break;
            }
        }
        loop {
            let prev = way[col];
            owner[col] = owner[prev];
            col = prev;
            if col == 0 {
                break;
            }
        }
    }
    let mut perm = vec![0usize; k];
    for c in 1..=k {
        perm[owner[c] - 1] = c - 1;
    }
    let total = perm.iter().enumerate().map(|(r, &c)| counts[r][c]).sum();
    (total, perm)
}

/// Exhaustive search is used up to this many blocks.
pub const EXHAUSTIVE_MAX_K: usize = 8;

/// Fraction of vertices whose predicted block differs from the truth under
/// the best relabelling of the prediction.
pub fn misclassification_rate(truth: &Labeling, pred: &Labeling) -> Result<f64> {
    let counts = confusion_matrix(truth, pred)?;
    if truth.is_empty() {
        return Ok(0.0);
    }
    let (matched, _) = if counts.len() <= EXHAUSTIVE_MAX_K {
        best_alignment_exhaustive(&counts)
    } else {
        best_alignment_hungarian(&counts)
    };
    Ok(1.0 - matched as f64 / truth.len() as f64)
}

/// `pred` relabelled to agree with `truth` as far as possible.
pub fn align_labels(truth: &Labeling, pred: &Labeling) -> Result<Labeling> {
    let counts = confusion_matrix(truth, pred)?;
    let (_, perm) = if counts.len() <= EXHAUSTIVE_MAX_K {
        best_alignment_exhaustive(&counts)
    } else {
        best_alignment_hungarian(&counts)
    };
    Labeling::new(pred.as_slice().iter().map(|&p| perm[p]).collect(), counts.len())
}

/// Edge-density estimate per block pair: edges between blocks `a` and `b`
/// (ordered pairs) over `n_a n_b`, or over `n_a (n_a - 1)` on the diagonal.
/// Entries with no candidate pairs are `NaN`.
pub fn estimate_connection_matrix(g: &SparseGraph, labels: &Labeling) -> Result<DMatrix<f64>> {
    if labels.len() != g.n() {
        return Err(Error::DimensionMismatch {
            expected: g.n(),
            got: labels.len(),
        });
    }
    let k = labels.k();
    let sizes = labels.block_sizes();
    let mut edges = DMatrix::<f64>::zeros(k, k);
    for u in 0..g.n() {
        let a = labels.get(u);
        for &v in g.neighbors(u) {
            edges[(a, labels.get(v as usize))] += 1.0;
        }
    }
    Ok(DMatrix::from_fn(k, k, |a, b| {
        let o = if a == b {
            sizes[a] as f64 * (sizes[a] as f64 - 1.0)
        } else {
            sizes[a] as f64 * sizes[b] as f64
        };
        if o > 0.0 {
            edges[(a, b)] / o
        } else {
            f64::NAN
        }
    }))
}
