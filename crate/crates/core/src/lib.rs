//! Decision-making oriented clustering.
//!
//! Samples are grouped so that one shared decision per group performs well
//! on the downstream decision problem, instead of grouping by distance in
//! data space. The engine alternates between assigning each sample to the
//! representative decision that serves it best and re-optimizing each
//! representative for its cluster.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod baselines;
pub mod engine;
pub mod error;
pub mod eval;
pub mod metric;
pub mod pcs;
pub mod rtp;
pub mod types;

pub use engine::{EngineConfig, Init};
pub use error::{DmocError, Result};
pub use metric::{check_feasible, evaluate_utility, total_utility, DecisionMetric, Metric, MetricSpec, SquaredEuclidean};
pub use pcs::{AssignmentRule, Norm, PcsMetric, PcsParams, PcsSolverConfig, SolverMethod};
pub use rtp::RtpParams;
pub use types::{ClusteringResult, DataSet, DecisionVector, Partition, RunTrace};
