//! End-to-end pipelines and seeded experiments: community detection on the
//! giant component, ratio sweeps and distance-concentration runs.

use std::io::Write;
use std::time::Instant;

use log::{debug, info, warn};
use serde::{Deserialize, Serialize};

use crate::baselines::{spectral_cluster, SpectralMethod};
use crate::clustering::{cluster_rows, misclassification_rate, ClusterOptions, Clusterer};
use crate::embedding::{double_center_with, spectral_embed_with, ScaledDistances, SentinelPolicy};
use crate::error::{invalid, Error, Result};
use crate::geodesic::{apsp_with, distance_cap, distance_stats, pair_histograms, PairHistograms};
use crate::graph::{SparseGraph, VertexMap};
use crate::linalg::EigenOptions;
use crate::par;
use crate::rng::derive_seed;
use crate::sbm::{sample_sbm, BlockModelParams, Labeling};
use crate::theory::{self, planted_from_ratio, planted_lambdas, threshold_ratio};

/// Environment variable capping the worker pool.
pub const THREADS_ENV: &str = "GEOSBM_THREADS";

/// Worker cap from [`THREADS_ENV`], if set to a positive integer.
pub fn threads_from_env() -> Option<usize> {
    std::env::var(THREADS_ENV).ok()?.trim().parse().ok().filter(|&t| t > 0)
}

/// Which matrix built from the distances is eigendecomposed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Normalize {
    /// Double-centred squared distances.
    #[default]
    Mds,
    /// Distances divided by `ln n`.
    Raw,
}

impl std::str::FromStr for Normalize {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "mds" => Ok(Normalize::Mds),
            "raw" => Ok(Normalize::Raw),
            _ => Err(invalid(format!("unknown normalization '{s}'"))),
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct DetectOptions {
    pub cap_factor: f64,
    pub normalize: Normalize,
    pub sentinel: SentinelPolicy,
    pub cluster: ClusterOptions,
    pub eigen: EigenOptions,
}

impl Default for DetectOptions {
    fn default() -> Self {
        Self {
            cap_factor: 3.0,
            normalize: Normalize::Mds,
            sentinel: SentinelPolicy::Keep,
            cluster: ClusterOptions::default(),
            eigen: EigenOptions::default(),
        }
    }
}

/// Output of [`detect_communities`]. `labels[i]` is the block of giant
/// vertex `i`, whose index in the input graph is `vertex_map.original(i)`.
#[derive(Debug, Clone)]
pub struct Detection {
    pub labels: Labeling,
    pub vertex_map: VertexMap,
    /// Leading `K + 1` eigenvalues (fewer on tiny components).
    pub eigenvalues: Vec<f64>,
    pub converged: bool,
}

/// Geodesic spectral clustering: giant component, capped distances,
/// normalization, leading eigenvectors, clustering.
pub fn detect_communities(g: &SparseGraph, k: usize, opts: &DetectOptions) -> Result<Detection> {
    let (sub, vertex_map) = giant_subgraph(g, k)?;
    let cap = distance_cap(g.n(), opts.cap_factor);
    let d = apsp_with(&sub, cap, g.n() as u32 + 1);
    let (rows, eigenvalues, converged) = embed_distances(d, k, (g.n() as f64).ln(), opts)?;
    let labels = cluster_rows(&rows, k, &opts.cluster)?;
    Ok(Detection {
        labels,
        vertex_map,
        eigenvalues,
        converged,
    })
}

/// Giant component of `g` as a compact subgraph; an error if it has fewer
/// than `2k` vertices.
pub fn giant_subgraph(g: &SparseGraph, k: usize) -> Result<(SparseGraph, VertexMap)> {
    if g.n() == 0 {
        return Err(invalid("graph is empty"));
    }
    if k == 0 {
        return Err(invalid("K must be at least 1"));
    }
    let comps = g.connected_components();
    if comps.giant_size() < 2 * k {
        return Err(Error::GiantTooSmall {
            size: comps.giant_size(),
            required: 2 * k,
        });
    }
    g.induced_subgraph(&comps.giant_vertices())
}

type Embedded = (nalgebra::DMatrix<f64>, Vec<f64>, bool);

fn embed_distances(d: crate::geodesic::DistanceMatrix, k: usize, log_n: f64, opts: &DetectOptions) -> Result<Embedded> {
    let n = d.n();
    let want = (k + 1).min(n);
    let emb = match opts.normalize {
        Normalize::Mds => spectral_embed_with(&double_center_with(d, opts.sentinel)?, want, &opts.eigen)?,
        Normalize::Raw => spectral_embed_with(&ScaledDistances::new(d, log_n, opts.sentinel)?, want, &opts.eigen)?,
    };
    debug!("embedded {n} vertices, eigenvalues {:?}, converged {}", emb.eigenvalues, emb.converged);
    let rows = emb.rows.columns(0, k).clone_owned();
    Ok((rows, emb.eigenvalues, emb.converged))
}

/// Everything that determines one experiment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub n: usize,
    pub k: usize,
    pub p: f64,
    pub q: f64,
    pub method: SpectralMethod,
    pub clusterer: Clusterer,
    pub normalize: Normalize,
    pub cap_factor: f64,
    pub restarts: usize,
    pub reps: usize,
    pub seed: u64,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            n: 10_000,
            k: 2,
            p: 14.0,
            q: 2.0,
            method: SpectralMethod::Geodesic,
            clusterer: Clusterer::Kmeans,
            normalize: Normalize::Mds,
            cap_factor: 3.0,
            restarts: 20,
            reps: 10,
            seed: 1,
        }
    }
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n == 0 || self.k == 0 || self.reps == 0 || self.restarts == 0 {
            return Err(invalid("n, K, reps and restarts must be positive"));
        }
        if !(self.cap_factor > 0.0) {
            return Err(invalid("cap factor must be positive"));
        }
        if self.k > 1 && !(self.p > self.q && self.q > 0.0) {
            return Err(invalid(format!("need p > q > 0, got p = {}, q = {}", self.p, self.q)));
        }
        Ok(())
    }

    pub fn average_degree(&self) -> f64 {
        planted_lambdas(self.p, self.q, self.k).0
    }

    pub fn ratio(&self) -> f64 {
        threshold_ratio(self.p, self.q, self.k)
    }

    fn model(&self) -> Result<BlockModelParams> {
        if self.k == 1 {
            return BlockModelParams::new(vec![1.0], vec![self.p], 1.0 / self.n as f64, self.n);
        }
        BlockModelParams::planted_partition(self.n, self.k, self.p, self.q)
    }

    fn detect_options(&self, seed: u64) -> DetectOptions {
        DetectOptions {
            cap_factor: self.cap_factor,
            normalize: self.normalize,
            cluster: ClusterOptions {
                clusterer: self.clusterer,
                restarts: self.restarts,
                seed,
            },
            ..Default::default()
        }
    }
}

/// One replicate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RepRecord {
    pub rep: usize,
    pub seed: u64,
    pub giant_size: usize,
    pub giant_fraction: f64,
    /// Measured on the giant component.
    pub misclassification: f64,
    /// Mean geodesic distance over same-block giant pairs (geodesic method).
    pub mean_within: Option<f64>,
    pub mean_cross: Option<f64>,
    pub wall_ms: f64,
}

/// Seed of replicate `rep` under base seed `seed`.
pub fn rep_seed(seed: u64, rep: usize) -> u64 {
    derive_seed(seed, "rep", rep as u64)
}

/// Samples a graph and clusters it with the configured method.
pub fn run_rep(config: &ExperimentConfig, rep: usize) -> Result<RepRecord> {
    let start = Instant::now();
    let seed = rep_seed(config.seed, rep);
    let (g, truth) = sample_sbm(&config.model()?, derive_seed(seed, "graph", 0))?;
    let (sub, map) = giant_subgraph(&g, config.k)?;
    let truth = truth.restrict(map.originals());
    let opts = config.detect_options(derive_seed(seed, "cluster", 0));
    let (pred, mean_within, mean_cross) = if config.method == SpectralMethod::Geodesic {
        let d = apsp_with(&sub, distance_cap(g.n(), config.cap_factor), g.n() as u32 + 1);
        let (within, cross) = pooled_means(&distance_stats(&d, &truth)?);
        let (rows, _, _) = embed_distances(d, config.k, (g.n() as f64).ln(), &opts)?;
        (cluster_rows(&rows, config.k, &opts.cluster)?, within, cross)
    } else {
        (spectral_cluster(&sub, config.method, config.k, &opts.cluster)?, None, None)
    };
    Ok(RepRecord {
        rep,
        seed,
        giant_size: sub.n(),
        giant_fraction: sub.n() as f64 / g.n() as f64,
        misclassification: misclassification_rate(&truth, &pred)?,
        mean_within,
        mean_cross,
        wall_ms: start.elapsed().as_secs_f64() * 1e3,
    })
}

fn pooled_means(stats: &[Vec<crate::geodesic::PairStats>]) -> (Option<f64>, Option<f64>) {
    let k = stats.len();
    let (mut w, mut wn, mut c, mut cn) = (0.0, 0u64, 0.0, 0u64);
    for a in 0..k {
        for b in a..k {
            let s = stats[a][b];
            if s.count == 0 {
                continue;
            }
            if a == b {
                w += s.mean * s.count as f64;
                wn += s.count;
            } else {
                c += s.mean * s.count as f64;
                cn += s.count;
            }
        }
    }
    let mean = |s: f64, n: u64| (n > 0).then(|| s / n as f64);
    (mean(w, wn), mean(c, cn))
}

/// Runs `config.reps` replicates; results are in rep order.
pub fn run_reps(config: &ExperimentConfig) -> Result<Vec<RepRecord>> {
    config.validate()?;
    par::map_indexed(config.reps, |r| run_rep(config, r)).into_iter().collect()
}

/// Median and quartiles (linear interpolation between order statistics).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub median: f64,
    pub q1: f64,
    pub q3: f64,
}

pub fn quantile(sorted: &[f64], p: f64) -> f64 {
    if sorted.is_empty() {
        return f64::NAN;
    }
    let pos = p * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    sorted[lo] + (sorted[hi] - sorted[lo]) * (pos - lo as f64)
}

pub fn summarize(values: &[f64]) -> Summary {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    Summary {
        median: quantile(&v, 0.5),
        q1: quantile(&v, 0.25),
        q3: quantile(&v, 0.75),
    }
}

pub fn median(values: &[f64]) -> f64 {
    summarize(values).median
}

/// Results for one ratio of a sweep.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepPoint {
    pub ratio: f64,
    /// `None` when the ratio is infeasible at the requested average degree.
    pub config: Option<ExperimentConfig>,
    pub records: Vec<RepRecord>,
    pub misclassification: Option<Summary>,
    pub warning: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepSummary {
    pub alpha: f64,
    pub base: ExperimentConfig,
    pub points: Vec<SweepPoint>,
}

pub const SWEEP_CSV_HEADER: &str = "ratio,alpha,p,q,n,k,method,clusterer,normalize,cap_factor,restarts,base_seed,rep,rep_seed,status,giant_size,giant_fraction,misclassification,mean_within,mean_cross";

fn opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

fn csv_row(ratio: f64, alpha: f64, c: &ExperimentConfig, r: &RepRecord) -> String {
    format!(
        "{ratio},{alpha},{},{},{},{},{},{},{},{},{},{},{},{},ok,{},{},{},{},{}",
        c.p,
        c.q,
        c.n,
        c.k,
        c.method,
        clusterer_name(c.clusterer),
        normalize_name(c.normalize),
        c.cap_factor,
        c.restarts,
        c.seed,
        r.rep,
        r.seed,
        r.giant_size,
        r.giant_fraction,
        r.misclassification,
        opt(r.mean_within),
        opt(r.mean_cross),
    )
}

pub fn clusterer_name(c: Clusterer) -> &'static str {
    match c {
        Clusterer::Kmeans => "kmeans",
        Clusterer::Gmm => "gmm",
    }
}

pub fn normalize_name(n: Normalize) -> &'static str {
    match n {
        Normalize::Mds => "mds",
        Normalize::Raw => "raw",
    }
}

/// For each ratio, derives `(p, q)` at average degree `alpha`, runs the
/// replicates of `base` and writes one CSV row per replicate (or one
/// `infeasible` row) before moving on. Ratio `i` uses base seed
/// `derive_seed(base.seed, "ratio", i)`.
pub fn run_sweep<W: Write>(base: &ExperimentConfig, ratios: &[f64], alpha: f64, mut csv: W) -> Result<SweepSummary> {
    if ratios.is_empty() {
        return Err(invalid("ratio grid is empty"));
    }
    if let Some(r) = ratios.iter().find(|&&r| !(r > 0.0)) {
        return Err(invalid(format!("ratio {r} requires p = q; ratios must be positive")));
    }
    writeln!(csv, "{SWEEP_CSV_HEADER}")?;
    let mut points = Vec::with_capacity(ratios.len());
    for (i, &ratio) in ratios.iter().enumerate() {
        let (p, q) = match planted_from_ratio(ratio, alpha, base.k) {
            Ok(pq) => pq,
            Err(e) => {
                warn!("skipping ratio {ratio}: {e}");
                writeln!(
                    csv,
                    "{ratio},{alpha},,,{},{},{},{},{},{},{},{},,,infeasible,,,,,",
                    base.n,
                    base.k,
                    base.method,
                    clusterer_name(base.clusterer),
                    normalize_name(base.normalize),
                    base.cap_factor,
                    base.restarts,
                    base.seed
                )?;
                points.push(SweepPoint {
                    ratio,
                    config: None,
                    records: Vec::new(),
                    misclassification: None,
                    warning: Some(e.to_string()),
                });
                continue;
            }
        };
        let config = ExperimentConfig {
            p,
            q,
            seed: derive_seed(base.seed, "ratio", i as u64),
            ..base.clone()
        };
        let records = run_reps(&config)?;
        for r in &records {
            writeln!(csv, "{}", csv_row(ratio, alpha, &config, r))?;
        }
        csv.flush()?;
        let rates: Vec<f64> = records.iter().map(|r| r.misclassification).collect();
        let s = summarize(&rates);
        info!("ratio {ratio}: median misclassification {:.4}", s.median);
        points.push(SweepPoint {
            ratio,
            config: Some(config),
            records,
            misclassification: Some(s),
            warning: None,
        });
    }
    Ok(SweepSummary {
        alpha,
        base: base.clone(),
        points,
    })
}

/// Comparison of one graph's geodesic distances with the typical-distance
/// constants.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConcentrationRecord {
    pub n: usize,
    pub rep: usize,
    pub seed: u64,
    pub giant_size: usize,
    pub within_over_ln: Option<f64>,
    pub cross_over_ln: Option<f64>,
    pub sigma1: Option<f64>,
    pub sigma2: Option<f64>,
    /// True when the best match pairs within-block distances with `sigma2`.
    pub swapped: bool,
    /// `||D / ln n - ideal||_F / n` over the giant component.
    pub frobenius_gap: f64,
    /// Fraction of giant pairs outside `(1 +- 0.1)` of the matched `tau`.
    pub outside_01: f64,
    /// Fraction of giant pairs outside `(1 +- 0.2)` of the matched `tau`.
    pub outside_02: f64,
}

/// Sum over pooled pairs of `(d / ln n - s)^2`, counting sentinels at
/// `sentinel`.
fn squared_gap(counts: &[u64], beyond: u64, sentinel: f64, log_n: f64, s: f64) -> f64 {
    let mut acc: f64 = counts.iter().enumerate().map(|(t, &c)| c as f64 * (t as f64 / log_n - s).powi(2)).sum();
    acc += beyond as f64 * (sentinel / log_n - s).powi(2);
    acc
}

fn outside(counts: &[u64], beyond: u64, tau: f64, eps: f64) -> u64 {
    let (lo, hi) = ((1.0 - eps) * tau, (1.0 + eps) * tau);
    let inside: u64 = counts
        .iter()
        .enumerate()
        .filter(|&(t, _)| (t as f64) >= lo && (t as f64) <= hi)
        .map(|(_, &c)| c)
        .sum();
    counts.iter().sum::<u64>() + beyond - inside
}

/// Streams distance histograms over the giant component and compares them
/// with the solver constants at this `n`. For `K = 1` only `sigma1` is
/// used.
pub fn concentration_from_histograms(hist: &PairHistograms, n: usize, giant: usize, lambdas: (f64, f64), k: usize) -> ConcentrationRecord {
    let nf = n as f64;
    let log_n = nf.ln();
    let sentinel = nf + 1.0;
    let (wc, wb) = hist.pooled(true);
    let (cc, cb) = hist.pooled(false);
    let within = crate::geodesic::histogram_stats(&wc);
    let cross = crate::geodesic::histogram_stats(&cc);
    let (l1, l2) = lambdas;
    let tau1 = theory::solve_tau(l1, l2, k, nf, theory::PairKind::Within).ok();
    let tau2 = if k > 1 {
        theory::solve_tau(l1, l2, k, nf, theory::PairKind::Cross).ok()
    } else {
        None
    };
    let t1 = tau1.unwrap_or(f64::NAN);
    let t2 = tau2.unwrap_or(t1);
    let gap = |tw: f64, tc: f64| {
        // unordered pairs appear twice in the symmetric matrix
        2.0 * (squared_gap(&wc, wb, sentinel, log_n, tw / log_n) + squared_gap(&cc, cb, sentinel, log_n, tc / log_n))
    };
    let direct = gap(t1, t2);
    let flipped = gap(t2, t1);
    let swapped = flipped < direct;
    let (tw, tc) = if swapped { (t2, t1) } else { (t1, t2) };
    let pairs = (wc.iter().sum::<u64>() + wb + cc.iter().sum::<u64>() + cb).max(1) as f64;
    let frac = |eps: f64| (outside(&wc, wb, tw, eps) + outside(&cc, cb, tc, eps)) as f64 / pairs;
    ConcentrationRecord {
        n,
        rep: 0,
        seed: 0,
        giant_size: giant,
        within_over_ln: (within.count > 0).then(|| within.mean / log_n),
        cross_over_ln: (cross.count > 0).then(|| cross.mean / log_n),
        sigma1: tau1.map(|t| t / log_n),
        sigma2: tau2.map(|t| t / log_n),
        swapped,
        frobenius_gap: direct.min(flipped).sqrt() / nf,
        outside_01: frac(0.1),
        outside_02: frac(0.2),
    }
}

/// One concentration replicate at size `config.n`.
pub fn run_concentration_rep(config: &ExperimentConfig, rep: usize) -> Result<ConcentrationRecord> {
    config.validate()?;
    let seed = rep_seed(config.seed, rep);
    let (g, truth) = sample_sbm(&config.model()?, derive_seed(seed, "graph", 0))?;
    let (sub, map) = giant_subgraph(&g, config.k)?;
    let truth = truth.restrict(map.originals());
    let cap = distance_cap(g.n(), config.cap_factor);
    let hist = pair_histograms(&sub, &truth, cap, g.n() as u32 + 1)?;
    let lambdas = if config.k == 1 {
        (config.p, config.p)
    } else {
        planted_lambdas(config.p, config.q, config.k)
    };
    Ok(ConcentrationRecord {
        rep,
        seed,
        ..concentration_from_histograms(&hist, g.n(), sub.n(), lambdas, config.k)
    })
}

/// Concentration replicates for every size in `sizes`, in order.
pub fn run_concentration(config: &ExperimentConfig, sizes: &[usize]) -> Result<Vec<ConcentrationRecord>> {
    let mut out = Vec::new();
    for &n in sizes {
        let c = ExperimentConfig { n, ..config.clone() };
        c.validate()?;
        let recs: Result<Vec<_>> = par::map_indexed(c.reps, |r| run_concentration_rep(&c, r)).into_iter().collect();
        out.extend(recs?);
    }
    Ok(out)
}

pub const CONCENTRATION_CSV_HEADER: &str =
    "n,rep,seed,giant_size,within_over_ln,cross_over_ln,sigma1,sigma2,swapped,frobenius_gap,outside_01,outside_02";

pub fn write_concentration_csv<W: Write>(records: &[ConcentrationRecord], mut w: W) -> std::io::Result<()> {
    writeln!(w, "{CONCENTRATION_CSV_HEADER}")?;
    for r in records {
        writeln!(
            w,
            "{},{},{},{},{},{},{},{},{},{},{},{}",
            r.n,
            r.rep,
            r.seed,
            r.giant_size,
            opt(r.within_over_ln),
            opt(r.cross_over_ln),
            opt(r.sigma1),
            opt(r.sigma2),
            r.swapped,
            r.frobenius_gap,
            r.outside_01,
            r.outside_02
        )?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn two_cliques() -> (SparseGraph, Labeling) {
        let mut edges = Vec::new();
        for base in [0, 10] {
            for i in 0..10 {
                for j in (i + 1)..10 {
                    edges.push((base + i, base + j));
                }
            }
        }
        edges.push((9, 10));
        let g = SparseGraph::from_edges(20, edges).unwrap();
        (g, Labeling::new((0..20).map(|i| i / 10).collect(), 2).unwrap())
    }

    #[test]
    fn cliques_are_separated() {
        let (g, truth) = two_cliques();
        for normalize in [Normalize::Mds, Normalize::Raw] {
            let opts = DetectOptions {
                normalize,
                ..Default::default()
            };
            let d = detect_communities(&g, 2, &opts).unwrap();
            assert_eq!(misclassification_rate(&truth, &d.labels).unwrap(), 0.0);
            assert_eq!(d.eigenvalues.len(), 3);
        }
    }

    #[test]
    fn small_giant_is_error() {
        let g = SparseGraph::from_edges(6, [(0, 1), (2, 3), (4, 5)]).unwrap();
        let err = detect_communities(&g, 2, &DetectOptions::default()).unwrap_err();
        assert!(matches!(err, Error::GiantTooSmall { size: 2, required: 4 }));
    }

    #[test]
    fn quantiles() {
        let s = summarize(&[4.0, 1.0, 3.0, 2.0]);
        assert_eq!(s.median, 2.5);
        assert_eq!(s.q1, 1.75);
        assert_eq!(s.q3, 3.25);
    }

    #[test]
    fn zero_ratio_is_rejected() {
        let err = run_sweep(&ExperimentConfig::default(), &[0.0], 8.0, Vec::new()).unwrap_err();
        assert!(matches!(err, Error::InvalidParameter(_)));
    }

    #[test]
    fn infeasible_ratio_is_recorded() {
        let base = ExperimentConfig {
            n: 200,
            reps: 1,
            ..Default::default()
        };
        let mut out = Vec::new();
        let s = run_sweep(&base, &[8.0], 8.0, &mut out).unwrap();
        assert!(s.points[0].warning.is_some());
        let text = String::from_utf8(out).unwrap();
        assert!(text.lines().nth(1).unwrap().contains("infeasible"));
    }
}
