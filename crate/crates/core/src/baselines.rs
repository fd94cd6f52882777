//! Classical spectral clustering on the adjacency matrix and the three graph
//! Laplacians.

use std::fmt;
use std::str::FromStr;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::clustering::{cluster_rows, ClusterOptions};
use crate::error::{invalid, Error, Result};
use crate::graph::SparseGraph;
use crate::linalg::{self, EigenOptions, SymmetricOperator, Which, ROW_CHUNK};
use crate::par;
use crate::sbm::Labeling;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SpectralMethod {
    Adjacency,
    UnnormalizedLaplacian,
    RandomWalkLaplacian,
    SymmetricLaplacian,
    #[default]
    Geodesic,
}

impl SpectralMethod {
    pub const ALL: [SpectralMethod; 5] = [
        SpectralMethod::Adjacency,
        SpectralMethod::UnnormalizedLaplacian,
        SpectralMethod::RandomWalkLaplacian,
        SpectralMethod::SymmetricLaplacian,
        SpectralMethod::Geodesic,
    ];

    /// Short name used on the command line.
    pub fn name(self) -> &'static str {
        match self {
            SpectralMethod::Adjacency => "adjacency",
            SpectralMethod::UnnormalizedLaplacian => "laplacian",
            SpectralMethod::RandomWalkLaplacian => "rw",
            SpectralMethod::SymmetricLaplacian => "sym",
            SpectralMethod::Geodesic => "geodesic",
        }
    }

    fn is_normalized(self) -> bool {
        !matches!(self, SpectralMethod::Adjacency | SpectralMethod::Geodesic)
    }
}

impl fmt::Display for SpectralMethod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for SpectralMethod {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        SpectralMethod::ALL
            .into_iter()
            .find(|m| m.name() == s)
            .ok_or_else(|| invalid(format!("unknown method '{s}'")))
    }
}

/// Sparse symmetric operators built from a graph.
#[derive(Debug, Clone)]
pub enum GraphOperator<'g> {
    /// `A`.
    Adjacency(&'g SparseGraph),
    /// `D - A`.
    Laplacian { g: &'g SparseGraph, degrees: Vec<f64> },
    /// `D^{-1/2} A D^{-1/2}`.
    NormalizedAdjacency { g: &'g SparseGraph, inv_sqrt_degrees: Vec<f64> },
}

impl GraphOperator<'_> {
    /// `D^{-1/2}` for the normalized form, `None` otherwise.
    pub fn inv_sqrt_degrees(&self) -> Option<&[f64]> {
        match self {
            GraphOperator::NormalizedAdjacency { inv_sqrt_degrees, .. } => Some(inv_sqrt_degrees),
            _ => None,
        }
    }

    fn graph(&self) -> &SparseGraph {
        match self {
            GraphOperator::Adjacency(g) => g,
            GraphOperator::Laplacian { g, .. } | GraphOperator::NormalizedAdjacency { g, .. } => g,
        }
    }
}

impl SymmetricOperator for GraphOperator<'_> {
    fn dim(&self) -> usize {
        self.graph().n()
    }

    fn apply(&self, x: &[f64], y: &mut [f64]) {
        let g = self.graph();
        par::for_each_row_mut(y, ROW_CHUNK, |c, out| {
            for (r, yi) in out.iter_mut().enumerate() {
                let i = c * ROW_CHUNK + r;
                let nb = g.neighbors(i);
                *yi = match self {
                    GraphOperator::Adjacency(_) => nb.iter().map(|&j| x[j as usize]).sum(),
                    GraphOperator::Laplacian { degrees, .. } => {
                        degrees[i] * x[i] - nb.iter().map(|&j| x[j as usize]).sum::<f64>()
                    }
                    GraphOperator::NormalizedAdjacency { inv_sqrt_degrees: s, .. } => {
                        s[i] * nb.iter().map(|&j| s[j as usize] * x[j as usize]).sum::<f64>()
                    }
                };
            }
        });
    }
}

/// Operator for `method`. The unnormalized and random-walk Laplacians are
/// both represented by `D^{-1/2} A D^{-1/2}`, which is similar to `D^{-1} A`
/// and whose eigenvectors `u` give the solutions `v = D^{-1/2} u` of
/// `L v = lambda D v`; use [`laplacian`] for `D - A` itself.
pub fn build_matrix(g: &SparseGraph, method: SpectralMethod) -> Result<GraphOperator<'_>> {
    match method {
        SpectralMethod::Adjacency => Ok(GraphOperator::Adjacency(g)),
        SpectralMethod::Geodesic => Err(invalid("the geodesic method has no sparse operator")),
        _ => {
            let mut s = Vec::with_capacity(g.n());
            for v in 0..g.n() {
                let d = g.degree(v);
                if d == 0 {
                    return Err(Error::ZeroDegree(v));
                }
                s.push(1.0 / (d as f64).sqrt());
            }
            Ok(GraphOperator::NormalizedAdjacency { g, inv_sqrt_degrees: s })
        }
    }
}

/// `L = D - A`.
pub fn laplacian(g: &SparseGraph) -> GraphOperator<'_> {
    GraphOperator::Laplacian {
        g,
        degrees: (0..g.n()).map(|v| g.degree(v) as f64).collect(),
    }
}

/// `n x k` spectral embedding used by `method` before clustering.
pub fn spectral_rows(g: &SparseGraph, method: SpectralMethod, k: usize, opts: &EigenOptions) -> Result<DMatrix<f64>> {
    let op = build_matrix(g, method)?;
    let which = if method == SpectralMethod::Adjacency {
        Which::LargestMagnitude
    } else {
        Which::LargestAlgebraic
    };
    let mut rows = linalg::top_k(&op, k, which, opts)?.vectors;
    match method {
        SpectralMethod::UnnormalizedLaplacian | SpectralMethod::RandomWalkLaplacian => {
            let s = op.inv_sqrt_degrees().expect("normalized operator");
            for (i, si) in s.iter().enumerate() {
                rows.row_mut(i).scale_mut(*si);
            }
        }
        SpectralMethod::SymmetricLaplacian => {
            for mut row in rows.row_iter_mut() {
                let norm = row.norm();
                if norm > 0.0 {
                    row /= norm;
                }
            }
        }
        _ => {}
    }
    Ok(rows)
}

/// Build matrix, take `k` leading eigenvectors, post-process, cluster.
/// The geodesic method runs the full distance pipeline and requires a
/// connected graph; normalized methods require every degree to be positive.
pub fn spectral_cluster(g: &SparseGraph, method: SpectralMethod, k: usize, opts: &ClusterOptions) -> Result<Labeling> {
    if k == 0 || k > g.n() {
        return Err(invalid(format!("need 1 <= k <= n, got k = {k}, n = {}", g.n())));
    }
    if k == 1 {
        return Labeling::new(vec![0; g.n()], 1);
    }
    if method == SpectralMethod::Geodesic {
        let comps = g.connected_components();
        if comps.giant_size() != g.n() {
            return Err(invalid("the geodesic method needs a connected graph; restrict to the giant component first"));
        }
        let out = crate::harness::detect_communities(g, k, &crate::harness::DetectOptions {
            cluster: *opts,
            ..Default::default()
        })?;
        return Ok(out.labels);
    }
    if method.is_normalized() {
        if let Some(v) = (0..g.n()).find(|&v| g.degree(v) == 0) {
            return Err(Error::ZeroDegree(v));
        }
    }
    let rows = spectral_rows(g, method, k, &EigenOptions::default())?;
    cluster_rows(&rows, k, opts)
}
