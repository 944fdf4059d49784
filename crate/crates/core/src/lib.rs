//! Sequence-length requirements of maximum-likelihood phylogeny
//! reconstruction under the CFN model: tree metrics, the CFN sampler,
//! likelihood inference, swap and blow-up distances, and constructions of
//! distinguishing-test batteries.

pub mod battery;
pub mod distance;
pub mod error;
pub mod inference;
pub mod model;
pub mod rng;
pub mod stats;
pub mod tree;

pub use error::{Error, Result};
pub use tree::{Label, Phylogeny, Point, RestrictedSubtree, RootedTree, TreeMetric};
