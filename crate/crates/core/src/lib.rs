//! Approximate centroid-linkage hierarchical agglomerative clustering.
//!
//! The engine in [`hac`] repeatedly merges the two closest clusters, where
//! "closest" is answered by a dynamic nearest-neighbor store behind the
//! [`nns::DynamicNns`] trait. Stores on offer:
//!
//! * [`nns::ExactNns`], a flat scan, used for exact clustering and as a test oracle;
//! * [`lsh::LshNns`], multi-scale p-stable LSH, correct for updates that do not
//!   depend on its answers;
//! * [`adaptive::AdaptiveNns`], which wraps per-level stores behind a covering
//!   net and a merge-and-reduce level scheme so that the clustering loop, whose
//!   updates do depend on earlier answers, can use LSH safely.
//!
//! [`metrics`] scores the resulting dendrograms (ARI, NMI, dendrogram purity,
//! Dasgupta cost, inversion counts) and [`io`] reads and writes points, labels
//! and dendrograms. [`cli`] backs the `chac` binary.
//!
//! ```
//! use centroid_hac::geometry::Dataset;
//! use centroid_hac::hac::{run_hac, HacConfig};
//!
//! let data = Dataset::new(vec![vec![0.0, 0.0], vec![1.0, 0.0], vec![5.0, 5.0]]).unwrap();
//! let (dendrogram, stats) = run_hac(&data, &HacConfig::heap(0.1)).unwrap();
//! assert_eq!(dendrogram.len(), 2);
//! assert_eq!(dendrogram.merges()[0].distance, 1.0);
//! assert_eq!(stats.merges, 2);
//! ```
//!
//! The `examples/` directory has one runnable program per capability.

pub mod adaptive;
pub mod cli;
pub mod geometry;
pub mod hac;
pub mod io;
pub mod lsh;
pub mod metrics;
pub mod nns;
