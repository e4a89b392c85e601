//! Geometry of layer-wise neural network representations.
//!
//! Two estimators are computed over point clouds of hidden activations:
//!
//! * the two-nearest-neighbor intrinsic dimension ([`id`]), and
//! * the information imbalance between two representations of the same
//!   samples ([`imbalance`]).
//!
//! Both sit on exact, deterministic brute-force neighbor ranks ([`geometry`]).
//! [`ingest`] reads activation dumps written by a training harness,
//! [`profile`] turns them into per-layer curves and detects features of those
//! curves, and [`synth`] generates clouds with known ground truth.

pub mod error;
pub mod geometry;
pub mod id;
pub mod imbalance;
pub mod ingest;
pub mod profile;
pub mod synth;

pub use error::EstimateError;
pub use geometry::{compute_neighbors, rank_of, DuplicatePolicy, GeometryError, Neighbor, NeighborTable, PointCloud, RankQuery};
pub use id::{estimate_id_2nn, estimate_id_decimated, DecimationPoint, IdEstimate};
pub use imbalance::{information_imbalance, relative_ii_difference, ImbalanceResult};
