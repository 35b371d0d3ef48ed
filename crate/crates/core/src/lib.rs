//! Small-scale laboratory for the trade-off between individual fairness and
//! edge privacy in graph convolutional networks.
//!
//! The crate trains two-layer GCNs from scratch, measures the Jaccard-based
//! individual-fairness bias and the exposure of training edges to
//! link-stealing attacks, and implements influence-guided loss reweighting,
//! heterophilic edge injection and two edge-DP baselines.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod attack;
pub mod error;
pub mod fairness;
pub mod gcn;
pub mod graph;
pub mod influence;
pub mod perturb;
pub mod pipeline;
pub mod qclp;
pub mod sparse;

#[cfg(test)]
pub(crate) mod testutil;

pub use error::{Error, Result};
