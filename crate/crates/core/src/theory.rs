//! Closed-form and Monte-Carlo quantities of the block model's branching
//! process approximation: kernel eigenstructure, detectability threshold,
//! typical geodesic lengths, survival probability and subspace bounds.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rand::Rng;
use rand_distr::{Distribution, Poisson};
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::linalg::{self, Which};
use crate::par;
use crate::rng::substream;
use crate::sbm::Labeling;

/// Eigenstructure of a kernel `B` under prior `pi`.
///
/// `lambdas` are the eigenvalues of `S = Pi^{1/2} B Pi^{1/2}` by decreasing
/// magnitude. Column `k` of `phi` is `Pi^{-1/2}` times the `k`-th unit
/// eigenvector of `S`, a left eigenvector of `mean_matrix = Pi B`; column `k`
/// of `psi` is `Pi^{1/2}` times it, a right eigenvector.
#[derive(Debug, Clone)]
pub struct SpectralParams {
    pub lambdas: Vec<f64>,
    pub phi: DMatrix<f64>,
    pub psi: DMatrix<f64>,
    pub mean_matrix: DMatrix<f64>,
    pub pi: Vec<f64>,
}

impl SpectralParams {
    pub fn k(&self) -> usize {
        self.lambdas.len()
    }

    /// `sum_a pi_a phi_i(a) phi_j(a)`.
    pub fn pi_inner(&self, i: usize, j: usize) -> f64 {
        (0..self.k()).map(|a| self.pi[a] * self.phi[(a, i)] * self.phi[(a, j)]).sum()
    }

    /// `sum_k lambda_k psi_k phi_k^T`, equal to `mean_matrix`.
    pub fn reconstruct_mean(&self) -> DMatrix<f64> {
        let k = self.k();
        let mut m = DMatrix::zeros(k, k);
        for (i, &l) in self.lambdas.iter().enumerate() {
            m += l * self.psi.column(i) * self.phi.column(i).transpose();
        }
        m
    }

    /// `sum_k lambda_k phi_k phi_k^T`, equal to the kernel.
    pub fn reconstruct_kernel(&self) -> DMatrix<f64> {
        let k = self.k();
        let mut m = DMatrix::zeros(k, k);
        for (i, &l) in self.lambdas.iter().enumerate() {
            m += l * self.phi.column(i) * self.phi.column(i).transpose();
        }
        m
    }

    /// Number of eigenvalues with `lambda_k^2 > lambda_1`.
    pub fn k0(&self) -> usize {
        let l1 = self.lambdas[0];
        self.lambdas.iter().filter(|&&l| l * l > l1).count()
    }
}

fn check_kernel(b: &DMatrix<f64>, pi: &[f64]) -> Result<usize> {
    let k = pi.len();
    if k == 0 || b.nrows() != k || b.ncols() != k {
        return Err(Error::DimensionMismatch {
            expected: k,
            got: b.nrows(),
        });
    }
    if pi.iter().any(|&p| !(p > 0.0)) || (pi.iter().sum::<f64>() - 1.0).abs() > 1e-12 {
        return Err(invalid("prior must be a positive probability vector"));
    }
    if (b - b.transpose()).abs().max() > 1e-12 * b.abs().max().max(1.0) {
        return Err(invalid("kernel must be symmetric"));
    }
    Ok(k)
}

/// `Pi^{1/2} B Pi^{1/2}`.
pub fn symmetric_kernel(b: &DMatrix<f64>, pi: &[f64]) -> DMatrix<f64> {
    let k = pi.len();
    DMatrix::from_fn(k, k, |a, c| pi[a].sqrt() * b[(a, c)] * pi[c].sqrt())
}

pub fn spectral_params(b: &DMatrix<f64>, pi: &[f64]) -> Result<SpectralParams> {
    let k = check_kernel(b, pi)?;
    let s = symmetric_kernel(b, pi);
    let eig = linalg::dense_top_k(&s, k, Which::LargestMagnitude);
    let mut phi = DMatrix::zeros(k, k);
    let mut psi = DMatrix::zeros(k, k);
    for j in 0..k {
        let mut v = eig.vectors.column(j).clone_owned();
        let peak = v.iter().copied().fold(0.0f64, |m, x| if x.abs() > m.abs() { x } else { m });
        if peak < 0.0 {
            v.neg_mut();
        }
        for a in 0..k {
            phi[(a, j)] = v[a] / pi[a].sqrt();
            psi[(a, j)] = v[a] * pi[a].sqrt();
        }
    }
    let mean_matrix = DMatrix::from_fn(k, k, |a, c| pi[a] * b[(a, c)]);
    Ok(SpectralParams {
        lambdas: eig.values,
        phi,
        psi,
        mean_matrix,
        pi: pi.to_vec(),
    })
}

/// `(lambda_1, lambda_2)` of the planted partition with uniform priors.
pub fn planted_lambdas(p: f64, q: f64, k: usize) -> (f64, f64) {
    let k = k as f64;
    ((p + (k - 1.0) * q) / k, (p - q) / k)
}

/// `(p - q)^2 / (K (p + (K - 1) q))`; above one is detectable.
pub fn threshold_ratio(p: f64, q: f64, k: usize) -> f64 {
    let k = k as f64;
    (p - q).powi(2) / (k * (p + (k - 1.0) * q))
}

/// `2 (B11 - B12)^2 / (B11 + B12)` for two equal blocks.
pub fn decelle_f(b11: f64, b12: f64) -> f64 {
    2.0 * (b11 - b12).powi(2) / (b11 + b12)
}

/// `(p, q)` with average degree `alpha = (p + (K - 1) q) / K` and
/// [`threshold_ratio`] equal to `ratio`, or an error when `q` would not be
/// positive.
pub fn planted_from_ratio(ratio: f64, alpha: f64, k: usize) -> Result<(f64, f64)> {
    if !(ratio > 0.0) || !(alpha > 0.0) || k < 2 {
        return Err(invalid(format!("need ratio > 0, alpha > 0, K >= 2; got {ratio}, {alpha}, {k}")));
    }
    let kf = k as f64;
    let gap = (ratio * kf * kf * alpha).sqrt();
    let q = (kf * alpha - gap) / kf;
    if !(q > 0.0) {
        return Err(invalid(format!("ratio {ratio} is infeasible at average degree {alpha} with K = {k}")));
    }
    Ok((q + gap, q))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PairKind {
    Within,
    Cross,
}

/// Left side of the typical-distance equation at `t`.
pub fn distance_lhs(lambda1: f64, lambda2: f64, k: usize, t: f64, kind: PairKind) -> f64 {
    let (a, b) = (lambda1.powf(t), lambda2.powf(t));
    match kind {
        PairKind::Within => b + (a - b) / k as f64,
        PairKind::Cross => (a - b) / k as f64,
    }
}

const TAU_GRID: usize = 4000;
const TAU_RTOL: f64 = 1e-12;

/// Smallest `t > 0` with `f(t) >= n`, searched on `(0, limit]`.
fn first_crossing(f: impl Fn(f64) -> f64, n: f64, limit: f64) -> Result<f64> {
    let step = limit / TAU_GRID as f64;
    let mut lo = 0.0;
    for i in 1..=TAU_GRID {
        let hi = step * i as f64;
        if f(hi) >= n {
            let (mut lo, mut hi) = (lo, hi);
            while hi - lo > TAU_RTOL * hi {
                let mid = 0.5 * (lo + hi);
                if f(mid) >= n {
                    hi = mid;
                } else {
                    lo = mid;
                }
            }
            return Ok(hi);
        }
        lo = hi;
    }
    Err(Error::NoRoot { limit })
}

/// Minimal positive root of the within-block or cross-block distance
/// equation.
pub fn solve_tau(lambda1: f64, lambda2: f64, k: usize, n: f64, kind: PairKind) -> Result<f64> {
    if !(lambda1 > 1.0) || !(lambda2 >= 0.0) || lambda2 > lambda1 || k == 0 || !(n > 1.0) {
        return Err(invalid(format!(
            "need lambda1 > 1, 0 <= lambda2 <= lambda1, K >= 1, n > 1; got {lambda1}, {lambda2}, {k}, {n}"
        )));
    }
    let limit = 10.0 * n.ln() / lambda1.ln();
    first_crossing(|t| distance_lhs(lambda1, lambda2, k, t, kind), n, limit)
}

/// Minimal positive `t` with `(S^t)_{ab} = n`, `S = Pi^{1/2} B Pi^{1/2}`.
/// Requires a nonnegative spectrum so that real powers are defined.
pub fn solve_tau_generic(b: &DMatrix<f64>, pi: &[f64], a: usize, c: usize, n: f64) -> Result<f64> {
    let k = check_kernel(b, pi)?;
    if a >= k || c >= k {
        return Err(Error::OutOfRange(format!("block pair ({a}, {c}) with K = {k}")));
    }
    let eig = SymmetricEigen::new(symmetric_kernel(b, pi));
    if eig.eigenvalues.iter().any(|&l| l < -1e-12) {
        return Err(invalid("kernel has a negative eigenvalue; real powers are undefined"));
    }
    let l1 = eig.eigenvalues.max();
    if !(l1 > 1.0) || !(n > 1.0) {
        return Err(invalid("need lambda1 > 1 and n > 1"));
    }
    let weights: Vec<(f64, f64)> = (0..k)
        .map(|j| (eig.eigenvalues[j].max(0.0), eig.eigenvectors[(a, j)] * eig.eigenvectors[(c, j)]))
        .collect();
    let f = |t: f64| weights.iter().map(|&(l, w)| w * l.powf(t)).sum::<f64>();
    first_crossing(f, n, 10.0 * n.ln() / l1.ln())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GeodesicConstants {
    pub tau1: f64,
    pub tau2: f64,
    pub sigma1: f64,
    pub sigma2: f64,
}

/// Within-block (`tau1`) and cross-block (`tau2`) typical distances.
pub fn geodesic_constants(lambda1: f64, lambda2: f64, k: usize, n: f64) -> Result<GeodesicConstants> {
    let tau1 = solve_tau(lambda1, lambda2, k, n, PairKind::Within)?;
    let tau2 = solve_tau(lambda1, lambda2, k, n, PairKind::Cross)?;
    Ok(GeodesicConstants {
        tau1,
        tau2,
        sigma1: tau1 / n.ln(),
        sigma2: tau2 / n.ln(),
    })
}

/// Block-constant matrix with `sigma1` within blocks, `sigma2` across and
/// zero diagonal.
pub fn ideal_distance_matrix(labels: &Labeling, sigma1: f64, sigma2: f64) -> DMatrix<f64> {
    let n = labels.len();
    DMatrix::from_fn(n, n, |i, j| {
        if i == j {
            0.0
        } else if labels.get(i) == labels.get(j) {
            sigma1
        } else {
            sigma2
        }
    })
}

/// Nonzero eigenvalues of the ideal matrix plus `sigma1 I` for `k` equal
/// blocks of size `n / k`: one at `(n/k)(sigma1 + (k-1) sigma2)` followed
/// by `k - 1` at `(n/k)(sigma1 - sigma2)`.
pub fn ideal_spectrum(n: usize, k: usize, sigma1: f64, sigma2: f64) -> Vec<f64> {
    let m = n as f64 / k as f64;
    let mut v = vec![m * (sigma1 + (k as f64 - 1.0) * sigma2)];
    v.extend(std::iter::repeat_n(m * (sigma1 - sigma2), k - 1));
    v
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum StopReason {
    Extinct,
    Horizon,
    PopulationCap,
}

/// Type counts per generation of a multi-type branching process.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BranchingTrajectory {
    pub generations: Vec<Vec<u64>>,
    /// Zero-based.
    pub root_type: usize,
    pub stop: StopReason,
}

impl BranchingTrajectory {
    pub fn total(&self, t: usize) -> u64 {
        self.generations[t].iter().sum()
    }

    pub fn is_extinct(&self) -> bool {
        self.stop == StopReason::Extinct
    }

    pub fn truncated(&self) -> bool {
        self.stop == StopReason::PopulationCap
    }

    /// Population at generation `t`, zero after extinction.
    pub fn at(&self, t: usize) -> Option<Vec<u64>> {
        match self.generations.get(t) {
            Some(z) => Some(z.clone()),
            None if self.is_extinct() => Some(vec![0; self.generations[0].len()]),
            None => None,
        }
    }
}

/// Offspring intensities `B_ab pi_b`: row `a` holds the mean number of
/// children of each type born to one type-`a` particle.
pub fn offspring_means(b: &DMatrix<f64>, pi: &[f64]) -> DMatrix<f64> {
    let k = pi.len();
    DMatrix::from_fn(k, k, |a, c| b[(a, c)] * pi[c])
}

fn poisson<R: Rng>(mean: f64, rng: &mut R) -> u64 {
    if mean <= 0.0 {
        return 0;
    }
    Poisson::new(mean).map(|d| d.sample(rng) as u64).unwrap_or(u64::MAX)
}

/// One Poisson multi-type Galton-Watson trajectory from a single particle of
/// type `root`. Stops at extinction, after `max_generations` generations, or
/// once a generation exceeds `max_population` particles.
pub fn simulate_mtgw<R: Rng>(
    offspring: &DMatrix<f64>,
    root: usize,
    max_generations: usize,
    max_population: u64,
    rng: &mut R,
) -> BranchingTrajectory {
    let k = offspring.nrows();
    let mut z = vec![0u64; k];
    z[root] = 1;
    let mut generations = vec![z.clone()];
    let mut stop = StopReason::Horizon;
    for _ in 0..max_generations {
        let mut next = vec![0u64; k];
        for a in 0..k {
            if z[a] == 0 {
                continue;
            }
            for (c, slot) in next.iter_mut().enumerate() {
                *slot = slot.saturating_add(poisson(z[a] as f64 * offspring[(a, c)], rng));
            }
        }
        let total: u64 = next.iter().fold(0u64, |s, &x| s.saturating_add(x));
        generations.push(next.clone());
        if total == 0 {
            stop = StopReason::Extinct;
            break;
        }
        if total > max_population {
            stop = StopReason::PopulationCap;
            break;
        }
        z = next;
    }
    BranchingTrajectory {
        generations,
        root_type: root,
        stop,
    }
}

/// Seeded form of [`simulate_mtgw`] taking the kernel and prior.
pub fn simulate_mtgw_seeded(
    b: &DMatrix<f64>,
    pi: &[f64],
    root: usize,
    max_generations: usize,
    max_population: u64,
    seed: u64,
) -> Result<BranchingTrajectory> {
    let k = check_kernel(b, pi)?;
    if root >= k {
        return Err(Error::OutOfRange(format!("root type {root} with K = {k}")));
    }
    let mut rng = substream(seed, "mtgw", 0);
    Ok(simulate_mtgw(&offspring_means(b, pi), root, max_generations, max_population, &mut rng))
}

/// `M^t z0` with `M = Pi B`: the expected type counts at generation `t`.
pub fn expected_population(params: &SpectralParams, z0: &[f64], t: usize) -> Vec<f64> {
    let mut z = DVector::from_column_slice(z0);
    for _ in 0..t {
        z = &params.mean_matrix * z;
    }
    z.iter().copied().collect()
}

/// Monte-Carlo mean and standard error of each type count for generations
/// `0..=t_max`, from `reps` independent trajectories rooted at `root`.
#[derive(Debug, Clone)]
pub struct PopulationMoments {
    pub mean: Vec<Vec<f64>>,
    pub std_error: Vec<Vec<f64>>,
}

pub fn population_moments(b: &DMatrix<f64>, pi: &[f64], root: usize, t_max: usize, reps: usize, seed: u64) -> Result<PopulationMoments> {
    let k = check_kernel(b, pi)?;
    if reps < 2 {
        return Err(invalid("need at least two replicates"));
    }
    let off = offspring_means(b, pi);
    let runs = par::map_indexed(reps, |r| {
        let mut rng = substream(seed, "mtgw-moments", r as u64);
        simulate_mtgw(&off, root, t_max, u64::MAX / 4, &mut rng)
    });
    let mut mean = vec![vec![0.0; k]; t_max + 1];
    let mut sq = vec![vec![0.0; k]; t_max + 1];
    for run in &runs {
        for t in 0..=t_max {
            let z = run.at(t).expect("uncapped run reaches the horizon");
            for a in 0..k {
                let x = z[a] as f64;
                mean[t][a] += x;
                sq[t][a] += x * x;
            }
        }
    }
    let r = reps as f64;
    let mut std_error = vec![vec![0.0; k]; t_max + 1];
    for t in 0..=t_max {
        for a in 0..k {
            let m = mean[t][a] / r;
            let var = (sq[t][a] / r - m * m).max(0.0) * r / (r - 1.0);
            mean[t][a] = m;
            std_error[t][a] = (var / r).sqrt();
        }
    }
    Ok(PopulationMoments { mean, std_error })
}

pub const ESCAPE_POPULATION: u64 = 10_000;
pub const SURVIVAL_HORIZON: usize = 50;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SurvivalEstimate {
    pub rho: f64,
    pub std_error: f64,
    pub reps: usize,
}

/// Fraction of trajectories, with root type drawn from `pi`, that are alive
/// after `horizon` generations or exceed [`ESCAPE_POPULATION`] particles.
pub fn survival_probability(b: &DMatrix<f64>, pi: &[f64], reps: usize, horizon: usize, seed: u64) -> Result<SurvivalEstimate> {
    check_kernel(b, pi)?;
    if reps == 0 {
        return Err(invalid("reps must be at least 1"));
    }
    let off = offspring_means(b, pi);
    let alive = par::map_indexed(reps, |r| {
        let mut rng = substream(seed, "survival", r as u64);
        let u: f64 = rng.random();
        let mut acc = 0.0;
        let root = pi
            .iter()
            .position(|&p| {
                acc += p;
                u < acc
            })
            .unwrap_or(pi.len() - 1);
        !simulate_mtgw(&off, root, horizon, ESCAPE_POPULATION, &mut rng).is_extinct()
    });
    let hits = alive.iter().filter(|&&a| a).count() as f64;
    let r = reps as f64;
    let rho = hits / r;
    Ok(SurvivalEstimate {
        rho,
        std_error: (rho * (1.0 - rho) / r).sqrt(),
        reps,
    })
}

/// Per-type survival probabilities from the fixed point
/// `rho_a = 1 - exp(-sum_b B_ab pi_b rho_b)`, iterated from `rho = 1`.
pub fn survival_fixed_point(b: &DMatrix<f64>, pi: &[f64]) -> Result<Vec<f64>> {
    let k = check_kernel(b, pi)?;
    let off = offspring_means(b, pi);
    let mut rho = vec![1.0; k];
    for _ in 0..1_000_000 {
        let next: Vec<f64> = (0..k)
            .map(|a| 1.0 - (-(0..k).map(|c| off[(a, c)] * rho[c]).sum::<f64>()).exp())
            .collect();
        let change = next.iter().zip(&rho).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max);
        rho = next;
        if change < 1e-15 {
            break;
        }
    }
    Ok(rho)
}

/// `sum_a pi_a rho_a`.
pub fn survival_total(b: &DMatrix<f64>, pi: &[f64]) -> Result<f64> {
    Ok(survival_fixed_point(b, pi)?.iter().zip(pi).map(|(r, p)| r * p).sum())
}

/// Kernel of the process restricted to the giant component:
/// `B (2 rho / K - rho^2 / K^2)`.
pub fn giant_kernel_adjust(b: &DMatrix<f64>, rho: f64, k: usize) -> Result<DMatrix<f64>> {
    if !(0.0..=1.0).contains(&rho) || k == 0 {
        return Err(invalid(format!("need rho in [0, 1] and K >= 1, got {rho}, {k}")));
    }
    let k = k as f64;
    Ok(b * (2.0 * rho / k - rho * rho / (k * k)))
}

/// `|<phi_k, Z_s> - lambda_k^{s-t} <phi_k, Z_t>| / ((t + 1)^2 lambda_1^{s/2})`
/// for zero-based eigen-index `k`.
pub fn martingale_deviation(traj: &BranchingTrajectory, params: &SpectralParams, k: usize, s: usize, t: usize) -> Result<f64> {
    if k >= params.k() {
        return Err(Error::OutOfRange(format!("eigen-index {k} with K = {}", params.k())));
    }
    if s >= t {
        return Err(invalid(format!("need s < t, got s = {s}, t = {t}")));
    }
    let (zs, zt) = match (traj.at(s), traj.at(t)) {
        (Some(a), Some(b)) if !(traj.truncated() && t + 1 >= traj.generations.len()) => (a, b),
        _ => return Err(Error::OutOfRange(format!("generation {t} is beyond the simulated trajectory"))),
    };
    let dot = |z: &[u64]| (0..params.k()).map(|a| params.phi[(a, k)] * z[a] as f64).sum::<f64>();
    let lk = params.lambdas[k];
    let scale = ((t + 1) as f64).powi(2) * params.lambdas[0].powf(s as f64 / 2.0);
    Ok((dot(&zs) - lk.powi(s as i32 - t as i32) * dot(&zt)).abs() / scale)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DavisKahan {
    /// Smallest distance between a selected and an unselected eigenvalue of `H`.
    pub delta: f64,
    /// `sqrt(2) ||H - H'||_F / delta`.
    pub bound: f64,
    /// `min_R ||W R - W'||_F`.
    pub achieved: f64,
}

impl DavisKahan {
    pub fn holds(&self) -> bool {
        self.achieved <= self.bound * (1.0 + 1e-12) + 1e-12
    }
}

/// Subspace perturbation bound for the `k` eigenvalues of `H` of largest
/// magnitude. These must be consecutive in the signed spectrum, so that an
/// interval `V` holds them and no other eigenvalue of `H`; `V` extends to the
/// midpoints of the neighbouring gaps. `W'` spans the eigenvectors of `H'`
/// with eigenvalues in `V`, of which there must be exactly `k`.
pub fn davis_kahan_bound(h: &DMatrix<f64>, h_prime: &DMatrix<f64>, k: usize) -> Result<DavisKahan> {
    let n = h.nrows();
    if h.shape() != h_prime.shape() || h.ncols() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: h_prime.nrows(),
        });
    }
    if k == 0 || k >= n {
        return Err(invalid(format!("need 1 <= k < n, got k = {k}, n = {n}")));
    }
    let full = linalg::dense_top_k(h, n, Which::LargestMagnitude);
    let (inside, outside) = full.values.split_at(k);
    let delta = inside
        .iter()
        .flat_map(|a| outside.iter().map(move |b| (a - b).abs()))
        .fold(f64::INFINITY, f64::min);
    if !(delta > 0.0) {
        return Err(Error::ZeroGap);
    }
    let lo = inside.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = inside.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if outside.iter().any(|&b| b > lo && b < hi) {
        return Err(Error::BoundHypothesis("the selected eigenvalues are not an interval of the spectrum".into()));
    }
    let below = outside.iter().copied().filter(|&b| b < lo).fold(f64::NEG_INFINITY, f64::max);
    let above = outside.iter().copied().filter(|&b| b > hi).fold(f64::INFINITY, f64::min);
    let v_lo = if below.is_finite() { 0.5 * (below + lo) } else { f64::NEG_INFINITY };
    let v_hi = if above.is_finite() { 0.5 * (above + hi) } else { f64::INFINITY };
    let perturbed = linalg::dense_top_k(h_prime, n, Which::LargestMagnitude);
    let chosen: Vec<usize> = (0..n).filter(|&i| (v_lo..=v_hi).contains(&perturbed.values[i])).collect();
    if chosen.len() != k {
        return Err(Error::BoundHypothesis(format!(
            "H' has {} eigenvalues in [{v_lo}, {v_hi}], expected {k}",
            chosen.len()
        )));
    }
    let w = full.vectors.columns(0, k).clone_owned();
    let w_prime = DMatrix::from_fn(n, k, |r, c| perturbed.vectors[(r, chosen[c])]);
    Ok(DavisKahan {
        delta,
        bound: 2f64.sqrt() * (h - h_prime).norm() / delta,
        achieved: linalg::procrustes_distance(&w, &w_prime),
    })
}

/// Theory constants for a planted partition at size `n`, as exported to
/// JSON. Distances are `None` when their equation has no root.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OracleReport {
    pub lambda1: f64,
    pub lambda2: f64,
    pub tau1: Option<f64>,
    pub tau2: Option<f64>,
    pub sigma1: Option<f64>,
    pub sigma2: Option<f64>,
    pub ratio: f64,
    pub rho: f64,
}

pub fn oracle_report(p: f64, q: f64, k: usize, n: usize) -> Result<OracleReport> {
    let kernel = crate::sbm::planted_partition_kernel(p, q, k)?;
    let pi = vec![1.0 / k as f64; k];
    let (l1, l2) = planted_lambdas(p, q, k);
    let nf = n as f64;
    let tau1 = solve_tau(l1, l2, k, nf, PairKind::Within).ok();
    let tau2 = solve_tau(l1, l2, k, nf, PairKind::Cross).ok();
    Ok(OracleReport {
        lambda1: l1,
        lambda2: l2,
        tau1,
        tau2,
        sigma1: tau1.map(|t| t / nf.ln()),
        sigma2: tau2.map(|t| t / nf.ln()),
        ratio: threshold_ratio(p, q, k),
        rho: survival_total(&kernel, &pi)?,
    })
}
