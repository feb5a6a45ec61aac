//! Point-cloud feature based task partitioning for generalist-specialist
//! learning.
//!
//! The crate covers the whole workflow: point-cloud ingestion ([`pcio`]),
//! shape descriptors ([`featex`]), normalization and PCA ([`featproc`]),
//! k-means with balanced greedy assignment ([`cluster`]), a tabular
//! generalist/specialist simulator ([`gslsim`]), statistics and run
//! persistence ([`evalrep`]) and the command-line front end ([`cli`]).

pub mod cli;
pub mod cluster;
pub mod evalrep;
pub mod featex;
pub mod featproc;
pub mod gslsim;
pub(crate) mod linalg;
pub mod pcio;
pub mod rng;

pub use cluster::{Centroids, Partition, PartitionMethod};
pub use featex::{DescriptorSpec, FeatureMatrix, FeatureVector};
pub use featproc::PcaModel;
pub use pcio::PointCloud;
