//! Exact fixed-radius nearest neighbor search by sorting along the first
//! principal component.
//!
//! Points are centered, projected onto their leading principal direction
//! and stored in score order. A radius query binary-searches the band of
//! scores within `R` of the query's score, which by Cauchy–Schwarz contains
//! every true neighbor, and filters that contiguous block with one
//! inner product per candidate against precomputed half-norms.
//!
//! ```
//! use snn::{PointMatrix, SnnIndex};
//!
//! let points = PointMatrix::from_rows(&[[0.0, 0.0], [3.0, 4.0], [6.0, 8.0]]).unwrap();
//! let index = SnnIndex::build(&points).unwrap();
//! let hits = index.query_radius(&[3.0, 4.0], 5.0).unwrap();
//! assert_eq!(hits.ids(), vec![0, 1, 2]);
//! ```

pub mod cli;
pub mod dataset;
pub mod dbscan;
pub mod error;
pub mod indexer;
pub mod kernels;
pub mod metrics;
pub mod oracle;
pub mod persist;
pub mod query;
pub mod synthetic;
pub mod theory;

pub use dataset::{center, column_mean, zscore_standardize, PointMatrix};
pub use dbscan::{dbscan, nmi, Backend, DbscanParams, Labeling, NOISE};
pub use error::{Result, SnnError};
pub use indexer::{principal_direction, PrincipalDirection, SnnIndex};
pub use metrics::{MetricKind, MetricSpec};
pub use oracle::{brute_force_loop, brute_force_matvec, distance_sq, DistanceFormula};
pub use query::{CandidateRange, Hit, QueryOutcome, QueryResult};
pub use theory::{chi2_cdf, efficiency_ratio, p1, p2, BlobModel};
