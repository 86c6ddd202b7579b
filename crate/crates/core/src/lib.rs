//! Coresets for k-median and k-means in low-dimensional Euclidean space.
//!
//! The crate builds weighted summaries ("coresets") that price every k-center
//! set within `1 +- eps` of the full input, extracts near-optimal clusterings
//! from them, maintains them over insertion-only streams, and provides the
//! fuzzy nearest-neighbor index the constructions rely on for large inputs.
//!
//! ```
//! use kcoreset::{bicriteria_centers, build_coreset, clustering_cost, CenterSet, CostKind, WeightedPointSet};
//!
//! let rows: Vec<[f64; 2]> = (0..500).map(|i| [(i % 25) as f64, (i / 25) as f64]).collect();
//! let p = WeightedPointSet::from_rows(&rows).unwrap();
//! let a = bicriteria_centers(&p, 3, 4.0, 7).unwrap();
//! let s = build_coreset(&p, &a, 32.0, 3, 0.2, CostKind::Median).unwrap();
//! assert_eq!(s.set.total_weight(), 500);
//! let c = CenterSet::from_rows(&[[3.0, 3.0], [10.0, 12.0], [20.0, 2.0]]).unwrap();
//! let full = clustering_cost(&p, &c, CostKind::Median).unwrap();
//! let approx = clustering_cost(&s.set, &c, CostKind::Median).unwrap();
//! assert!((approx - full).abs() <= 0.2 * full);
//! ```

pub mod bicriteria;
pub mod centroid;
pub mod coreset;
pub mod error;
pub mod fuzzy_nn;
pub mod geometry;
pub mod harness;
pub mod io;
pub mod local_search;
pub mod rng;
pub mod streaming;

pub use bicriteria::{bicriteria_centers, bicriteria_centers_report, good_subset, partition_by_distance, sample_centers};
pub use centroid::{
    approx_clustering, discrete_kmedian_approx, discrete_median_centroid_set, kmeans_approx, kmedian_approx, means_centroid_set,
    median_centroid_set, solve_by_enumeration, CentroidSet, PipelineReport, PipelineResult, Variant,
};
pub use coreset::{build_coreset, build_coreset_detailed, build_exponential_grid, snap_cell, Coreset, ExponentialGrid, GridCellKey};
pub use error::{ClusterError, Result};
pub use fuzzy_nn::{batch_nn, batch_nn_capped, build_index, estimate_tau, fuzzy_query, FuzzyConfig, FuzzyNNIndex};
pub use geometry::{
    assign_to_centers, clustering_cost, distance, gonzalez_kcenter, point_set_distance, CenterSet, CostKind, Point,
    PointAccess, WeightedPointSet,
};
pub use harness::{brute_force_discrete, certify_coreset, generate_instance, weighted_centroid, InstanceSpec, Shape};
pub use local_search::{local_search, local_search_from};
pub use streaming::{StreamConfig, StreamState};
