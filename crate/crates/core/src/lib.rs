//! Community detection in sparse stochastic block models by spectral
//! clustering of the graph distance matrix.
//!
//! The pipeline samples or loads a graph, restricts it to its giant
//! component, computes all-pairs shortest paths with a length cap,
//! double-centres the squared distances, takes the leading eigenvectors and
//! clusters their rows. Classical adjacency and Laplacian spectral
//! clustering are available for comparison, along with the branching-process
//! constants that predict typical distances and the detectability threshold.

pub mod baselines;
pub mod clustering;
pub mod embedding;
pub mod error;
pub mod geodesic;
pub mod graph;
pub mod harness;
pub mod linalg;
pub mod par;
pub mod rng;
pub mod sbm;
pub mod theory;

pub use baselines::{spectral_cluster, SpectralMethod};
pub use clustering::{kmeans, misclassification_rate, ClusterOptions, Clusterer};
pub use embedding::{double_center, spectral_embed, CenteredMatrix, Embedding};
pub use error::{Error, Result};
pub use geodesic::{apsp, DistanceMatrix};
pub use graph::SparseGraph;
pub use harness::{detect_communities, DetectOptions, Detection, ExperimentConfig, Normalize};
pub use sbm::{sample_sbm, BlockModelParams, Labeling};
