//! Community detection by density peaks on an Isomap embedding.
//!
//! A graph is turned into structure-similarity distances, embedded with
//! Isomap, and clustered by density peaks. The community count is the one
//! maximizing a square-root-penalized partition density. Benchmark graph
//! generators, agreement metrics, and k-means/DBSCAN baselines are included
//! for evaluation.

pub mod baselines;
pub mod bench;
pub mod cli;
pub mod density;
pub mod generators;
pub mod graph;
pub mod isomap;
pub mod matrix;
pub mod metrics;
pub mod pipeline;
pub mod quality;
pub mod seed;
pub mod similarity;

pub use graph::{connected_components, load_edge_list, load_gml, Graph};
pub use pipeline::{detect, IsoFdpConfig};
