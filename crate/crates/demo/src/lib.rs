//! WebAssembly bindings for the browser demo in `www/`.
//!
//! Every export takes plain numbers and returns a JSON string; the Rust
//! functions behind them are ordinary and tested natively.

use geosbm::clustering::{cluster_rows, misclassification_rate, ClusterOptions};
use geosbm::embedding::{double_center, spectral_embed};
use geosbm::geodesic::{apsp_with, distance_cap};
use geosbm::harness::giant_subgraph;
use geosbm::sbm::{planted_partition_kernel, sample_sbm, BlockModelParams};
use geosbm::theory::{
    expected_population, planted_lambdas, simulate_mtgw_seeded, solve_tau, spectral_params, survival_total,
    threshold_ratio, PairKind,
};
use geosbm::Result;
use serde::Serialize;
use wasm_bindgen::prelude::*;

/// Largest graph the page will sample; the distance matrix is `n^2` entries.
pub const MAX_DEMO_N: usize = 3000;

#[derive(Debug, Serialize)]
pub struct Scatter {
    pub n: usize,
    pub giant: usize,
    /// First two embedding coordinates of every giant vertex.
    pub x: Vec<f64>,
    pub y: Vec<f64>,
    pub truth: Vec<usize>,
    pub predicted: Vec<usize>,
    pub misclassification: f64,
    pub eigenvalues: Vec<f64>,
    pub ratio: f64,
}

/// Samples a planted-partition graph and runs the geodesic pipeline on its
/// giant component.
pub fn sample_and_embed(n: usize, k: usize, p: f64, q: f64, seed: u64) -> Result<Scatter> {
    if n > MAX_DEMO_N {
        return Err(geosbm::Error::InvalidParameter(format!("the demo is limited to n <= {MAX_DEMO_N}")));
    }
    let params = BlockModelParams::planted_partition(n, k, p, q)?;
    let (g, truth) = sample_sbm(&params, seed)?;
    let (sub, map) = giant_subgraph(&g, k)?;
    let truth = truth.restrict(map.originals());
    let d = apsp_with(&sub, distance_cap(n, 3.0), n as u32 + 1);
    let emb = spectral_embed(&double_center(d)?, (k + 1).min(sub.n()))?;
    let rows = emb.rows.columns(0, k).clone_owned();
    let opts = ClusterOptions {
        seed,
        ..Default::default()
    };
    let predicted = cluster_rows(&rows, k, &opts)?;
    let second = if emb.k() > 1 { 1 } else { 0 };
    Ok(Scatter {
        n,
        giant: sub.n(),
        x: emb.rows.column(0).iter().copied().collect(),
        y: emb.rows.column(second).iter().copied().collect(),
        misclassification: misclassification_rate(&truth, &predicted)?,
        truth: truth.as_slice().to_vec(),
        predicted: predicted.as_slice().to_vec(),
        eigenvalues: emb.eigenvalues,
        ratio: threshold_ratio(p, q, k),
    })
}

#[derive(Debug, Serialize)]
pub struct DistanceCurve {
    pub lambda1: f64,
    pub lambda2: f64,
    pub ratio: f64,
    pub rho: f64,
    pub n: Vec<f64>,
    /// Within-block and cross-block typical distances; `None` where the
    /// equation has no root.
    pub tau_within: Vec<Option<f64>>,
    pub tau_cross: Vec<Option<f64>>,
}

/// Typical distances on a log-spaced grid of graph sizes.
pub fn distance_curve(p: f64, q: f64, k: usize, n_min: f64, n_max: f64, points: usize) -> Result<DistanceCurve> {
    if !(n_min > 1.0 && n_max > n_min) || points < 2 {
        return Err(geosbm::Error::InvalidParameter("need 1 < n_min < n_max and at least two points".into()));
    }
    let (l1, l2) = planted_lambdas(p, q, k);
    let pi = vec![1.0 / k as f64; k];
    let rho = survival_total(&planted_partition_kernel(p, q, k)?, &pi)?;
    let step = (n_max / n_min).ln() / (points - 1) as f64;
    let n: Vec<f64> = (0..points).map(|i| n_min * (step * i as f64).exp()).collect();
    let solve = |kind| n.iter().map(|&m| solve_tau(l1, l2, k, m, kind).ok()).collect();
    Ok(DistanceCurve {
        lambda1: l1,
        lambda2: l2,
        ratio: threshold_ratio(p, q, k),
        rho,
        tau_within: solve(PairKind::Within),
        tau_cross: solve(PairKind::Cross),
        n,
    })
}

#[derive(Debug, Serialize)]
pub struct Trajectories {
    /// `runs[r][t][a]`: type-`a` count at generation `t` of run `r`.
    pub runs: Vec<Vec<Vec<u64>>>,
    /// Expected counts for a type-0 root.
    pub expected: Vec<Vec<f64>>,
}

/// Branching-process runs from a type-0 root next to their mean.
pub fn branching(p: f64, q: f64, k: usize, generations: usize, runs: usize, seed: u64) -> Result<Trajectories> {
    let b = planted_partition_kernel(p, q, k)?;
    let pi = vec![1.0 / k as f64; k];
    let params = spectral_params(&b, &pi)?;
    let mut z0 = vec![0.0; k];
    z0[0] = 1.0;
    let expected = (0..=generations).map(|t| expected_population(&params, &z0, t)).collect();
    let runs = (0..runs as u64)
        .map(|r| {
            let traj = simulate_mtgw_seeded(&b, &pi, 0, generations, 1_000_000, seed.wrapping_add(r))?;
            Ok((0..=generations).map_while(|t| traj.at(t)).collect())
        })
        .collect::<Result<_>>()?;
    Ok(Trajectories { runs, expected })
}

fn to_js<T: Serialize>(r: Result<T>) -> std::result::Result<String, JsError> {
    let value = r.map_err(|e| JsError::new(&e.to_string()))?;
    serde_json::to_string(&value).map_err(|e| JsError::new(&e.to_string()))
}

#[wasm_bindgen(js_name = sampleAndEmbed)]
pub fn sample_and_embed_js(n: usize, k: usize, p: f64, q: f64, seed: u32) -> std::result::Result<String, JsError> {
    to_js(sample_and_embed(n, k, p, q, u64::from(seed)))
}

#[wasm_bindgen(js_name = distanceCurve)]
pub fn distance_curve_js(p: f64, q: f64, k: usize, n_min: f64, n_max: f64, points: usize) -> std::result::Result<String, JsError> {
    to_js(distance_curve(p, q, k, n_min, n_max, points))
}

#[wasm_bindgen(js_name = branching)]
pub fn branching_js(p: f64, q: f64, k: usize, generations: usize, runs: usize, seed: u32) -> std::result::Result<String, JsError> {
    to_js(branching(p, q, k, generations, runs, u64::from(seed)))
}
