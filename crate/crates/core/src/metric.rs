//! The decision-utility interface the clustering engine optimizes against.

use serde::{Deserialize, Serialize};

use crate::error::{DmocError, Result};
use crate::pcs::{AssignmentRule, PcsMetric, PcsParams, PcsSolverConfig};
use crate::rtp::RtpParams;
use crate::types::{mean_of, ClusteringResult, DataSet, DecisionVector};

/// Absolute slack allowed on every feasibility constraint.
pub const FEASIBILITY_TOL: f64 = 1e-9;

/// A utility `f(x; g)` over decisions `x` and data samples `g`, together with
/// the feasible decision set and a way to pick the best decision for a group
/// of samples.
pub trait DecisionMetric: Sync {
    fn data_dim(&self) -> usize;

    fn decision_dim(&self) -> usize;

    /// `f(x; g)`. Callers guarantee matching dimensions.
    fn utility(&self, x: &[f64], g: &[f64]) -> f64;

    fn is_feasible(&self, x: &[f64]) -> bool;

    /// Score used to assign a sample to a representative. Equal to the
    /// utility unless the metric deliberately uses a surrogate.
    fn assignment_score(&self, x: &[f64], g: &[f64]) -> f64 {
        self.utility(x, g)
    }

    /// Feasible decision maximizing `sum f(x; g)` over `samples`.
    fn best_decision(&self, samples: &[&[f64]]) -> Result<DecisionVector>;

    fn validate(&self) -> Result<()> {
        Ok(())
    }
}

/// Parameters of one of the two supported decision problems.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum MetricSpec {
    Rtp(RtpParams),
    Pcs(PcsParams),
}

impl MetricSpec {
    pub fn decision_dim(&self) -> usize {
        match self {
            MetricSpec::Rtp(p) => p.slots,
            MetricSpec::Pcs(p) => p.slots(),
        }
    }

    pub fn data_dim(&self) -> usize {
        match self {
            MetricSpec::Rtp(p) => p.data_dim(),
            MetricSpec::Pcs(p) => p.slots(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            MetricSpec::Rtp(p) => p.validate(),
            MetricSpec::Pcs(p) => p.validate(),
        }
    }

    /// A runnable metric; the solver settings only matter for PCS.
    pub fn metric(&self, solver: PcsSolverConfig, rule: AssignmentRule) -> Metric {
        match self {
            MetricSpec::Rtp(p) => Metric::Rtp(p.clone()),
            MetricSpec::Pcs(p) => Metric::Pcs(PcsMetric::new(p.clone(), solver, rule)),
        }
    }
}

/// Runtime dispatch over the concrete metrics.
#[derive(Debug, Clone, PartialEq)]
pub enum Metric {
    Rtp(RtpParams),
    Pcs(PcsMetric),
}

impl DecisionMetric for Metric {
    fn data_dim(&self) -> usize {
        match self {
            Metric::Rtp(m) => DecisionMetric::data_dim(m),
            Metric::Pcs(m) => m.data_dim(),
        }
    }

    fn decision_dim(&self) -> usize {
        match self {
            Metric::Rtp(m) => m.decision_dim(),
            Metric::Pcs(m) => m.decision_dim(),
        }
    }

    fn utility(&self, x: &[f64], g: &[f64]) -> f64 {
        match self {
            Metric::Rtp(m) => m.utility(x, g),
            Metric::Pcs(m) => m.utility(x, g),
        }
    }

    fn is_feasible(&self, x: &[f64]) -> bool {
        match self {
            Metric::Rtp(m) => m.is_feasible(x),
            Metric::Pcs(m) => m.is_feasible(x),
        }
    }

    fn assignment_score(&self, x: &[f64], g: &[f64]) -> f64 {
        match self {
            Metric::Rtp(m) => m.assignment_score(x, g),
            Metric::Pcs(m) => m.assignment_score(x, g),
        }
    }

    fn best_decision(&self, samples: &[&[f64]]) -> Result<DecisionVector> {
        match self {
            Metric::Rtp(m) => m.best_decision(samples),
            Metric::Pcs(m) => m.best_decision(samples),
        }
    }

    fn validate(&self) -> Result<()> {
        match self {
            Metric::Rtp(m) => DecisionMetric::validate(m),
            Metric::Pcs(m) => m.validate(),
        }
    }
}

/// The conventional clustering objective `f(x; g) = -||x - g||^2` with an
/// unconstrained decision space equal to the data space. Running the engine
/// with this metric reproduces Lloyd's algorithm.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SquaredEuclidean {
    pub dim: usize,
}

impl DecisionMetric for SquaredEuclidean {
    fn data_dim(&self) -> usize {
        self.dim
    }

    fn decision_dim(&self) -> usize {
        self.dim
    }

    fn utility(&self, x: &[f64], g: &[f64]) -> f64 {
        -squared_distance(x, g)
    }

    fn is_feasible(&self, x: &[f64]) -> bool {
        x.len() == self.dim && x.iter().all(|v| v.is_finite())
    }

    fn best_decision(&self, samples: &[&[f64]]) -> Result<DecisionVector> {
        if samples.is_empty() {
            return Err(DmocError::EmptyCluster);
        }
        Ok(DecisionVector::new(mean_of(samples.iter().copied(), self.dim)))
    }
}

pub(crate) fn squared_distance(x: &[f64], g: &[f64]) -> f64 {
    x.iter().zip(g).map(|(a, b)| (a - b) * (a - b)).sum()
}

pub fn check_feasible(spec: &MetricSpec, x: &[f64]) -> bool {
    match spec {
        MetricSpec::Rtp(p) => p.is_feasible(x),
        MetricSpec::Pcs(p) => p.is_feasible(x),
    }
}

/// `f(x; g)` with dimension and feasibility checks.
pub fn evaluate_utility(spec: &MetricSpec, x: &[f64], g: &[f64]) -> Result<f64> {
    check_dims(spec.decision_dim(), x.len())?;
    check_dims(spec.data_dim(), g.len())?;
    if !check_feasible(spec, x) {
        return Err(DmocError::Infeasible(format!("{x:?}")));
    }
    Ok(match spec {
        MetricSpec::Rtp(p) => crate::rtp::welfare_unchecked(p, x, g),
        MetricSpec::Pcs(p) => crate::pcs::f2_unchecked(p, x, g),
    })
}

fn check_dims(expected: usize, found: usize) -> Result<()> {
    if expected == found {
        Ok(())
    } else {
        Err(DmocError::DimensionMismatch { expected, found })
    }
}

/// `sum_n f(x_{m(n)}; g_n)`, accumulated in sample order.
pub fn total_utility<M: DecisionMetric + ?Sized>(
    metric: &M,
    result: &ClusteringResult,
    data: &DataSet,
) -> Result<f64> {
    if data.is_empty() {
        return Err(DmocError::EmptyDataSet);
    }
    if result.partition.len() != data.len() {
        return Err(DmocError::SizeMismatch {
            expected: data.len(),
            found: result.partition.len(),
        });
    }
    if result.partition.clusters() != result.representatives.len() {
        return Err(DmocError::InvalidParameter(format!(
            "{} representatives for {} clusters",
            result.representatives.len(),
            result.partition.clusters()
        )));
    }
    check_dims(metric.data_dim(), data.dim())?;
    Ok(data
        .iter()
        .enumerate()
        .map(|(n, g)| metric.utility(result.decision_for(n), g))
        .sum())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pcs::Norm;
    use crate::types::{Partition, RunTrace};

    fn pcs(energy: f64, x_max: f64, slots: usize, norm: Norm) -> MetricSpec {
        MetricSpec::Pcs(PcsParams::new(vec![1.0; slots], norm, energy, x_max).unwrap())
    }

    fn single_result(reps: Vec<Vec<f64>>, assignment: Vec<usize>) -> ClusteringResult {
        let clusters = reps.len();
        ClusteringResult {
            partition: Partition::new(assignment, clusters).unwrap(),
            representatives: reps.into_iter().map(DecisionVector::new).collect(),
            objective: 0.0,
            trace: RunTrace { initial: 0.0, objectives: vec![], iterations_run: 0, converged: true },
        }
    }

    #[test]
    fn evaluate_pcs_peak() {
        let spec = pcs(2.0, 2.0, 2, Norm::Infinity);
        assert_eq!(evaluate_utility(&spec, &[2.0, 0.0], &[0.0, 3.0]).unwrap(), -3.0);
        assert_eq!(evaluate_utility(&spec, &[0.0, 2.0], &[0.0, 3.0]).unwrap(), -5.0);
        // the all-zero profile violates the energy constraint
        assert!(matches!(evaluate_utility(&spec, &[0.0, 0.0], &[3.0, 1.0]), Err(DmocError::Infeasible(_))));
    }

    #[test]
    fn evaluate_rtp_example() {
        let spec = MetricSpec::Rtp(RtpParams { consumers: 1, slots: 1, alpha: 0.5, a: 0.0, b: 0.0, c: 0.0 });
        assert_eq!(evaluate_utility(&spec, &[0.0], &[2.0]).unwrap(), 4.0);
        assert!(matches!(evaluate_utility(&spec, &[0.0], &[2.0, 1.0]), Err(DmocError::DimensionMismatch { .. })));
        assert!(matches!(evaluate_utility(&spec, &[-0.5], &[2.0]), Err(DmocError::Infeasible(_))));
    }

    #[test]
    fn feasibility_examples() {
        let spec = pcs(30.0, 3.0, 24, Norm::Infinity);
        assert!(check_feasible(&spec, &[1.25; 24]));
        assert!(!check_feasible(&spec, &[0.0; 24]));
        assert!(!check_feasible(&spec, &[3.5; 24]));
        let rtp = MetricSpec::Rtp(RtpParams::default());
        assert!(!check_feasible(&rtp, &[1.0, -0.5, 1.0, 1.0]));
        assert!(check_feasible(&rtp, &[1.0, 0.5, 1.0, 1.0]));
    }

    #[test]
    fn evaluate_is_deterministic() {
        let spec = pcs(2.0, 2.0, 3, Norm::Finite(3.0));
        let a = evaluate_utility(&spec, &[0.3, 0.9, 0.8], &[1.1, 0.2, 3.3]).unwrap();
        let b = evaluate_utility(&spec, &[0.3, 0.9, 0.8], &[1.1, 0.2, 3.3]).unwrap();
        assert_eq!(a.to_bits(), b.to_bits());
    }

    #[test]
    fn total_utility_cases() {
        let spec = pcs(2.0, 2.0, 2, Norm::Infinity);
        let metric = spec.metric(PcsSolverConfig::default(), AssignmentRule::Exact);
        let data = DataSet::new(vec![vec![3.0, 0.0]]).unwrap();
        let result = single_result(vec![vec![0.0, 2.0]], vec![0]);
        assert_eq!(
            total_utility(&metric, &result, &data).unwrap(),
            evaluate_utility(&spec, &[0.0, 2.0], &[3.0, 0.0]).unwrap()
        );

        let data2 = DataSet::new(vec![vec![3.0, 0.0], vec![0.0, 3.0]]).unwrap();
        let result2 = single_result(vec![vec![0.0, 2.0], vec![2.0, 0.0]], vec![0, 1]);
        assert_eq!(
            total_utility(&metric, &result2, &data2).unwrap(),
            2.0 * total_utility(&metric, &result, &data).unwrap()
        );

        let empty = DataSet::with_dim(2, vec![]).unwrap();
        let none = single_result(vec![vec![0.0, 2.0]], vec![]);
        assert_eq!(total_utility(&metric, &none, &empty), Err(DmocError::EmptyDataSet));
        assert!(matches!(total_utility(&metric, &result, &data2), Err(DmocError::SizeMismatch { .. })));
    }
}
