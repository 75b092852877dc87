//! Alternating optimization between cluster assignment and representative
//! decisions.
//!
//! Each iteration assigns every sample to the representative decision with
//! the highest utility for it, then re-solves every representative for its
//! cluster. Neither step can lower the total utility, so the objective
//! sequence is nondecreasing and the loop stops once the gain falls to the
//! tolerance or the iteration cap is reached.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::baselines;
use crate::error::{DmocError, Result};
use crate::metric::DecisionMetric;
use crate::types::{ClusteringResult, DataSet, DecisionVector, Partition, RunTrace};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Init {
    /// Optimal decisions of `M` distinct samples drawn with the seed.
    Random,
    FromDecisions(Vec<DecisionVector>),
    /// Representatives of the k-means pipeline with the same seed.
    FromKmeansPipeline,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EngineConfig {
    pub clusters: usize,
    pub max_iters: usize,
    pub tolerance: f64,
    pub seed: u64,
    pub init: Init,
}

impl Default for EngineConfig {
    fn default() -> Self {
        Self {
            clusters: 1,
            max_iters: 10,
            tolerance: 1e-3,
            seed: 0,
            init: Init::Random,
        }
    }
}

impl EngineConfig {
    pub fn new(clusters: usize, seed: u64) -> Self {
        Self { clusters, seed, ..Self::default() }
    }

    pub fn with_init(mut self, init: Init) -> Self {
        self.init = init;
        self
    }

    pub fn validate(&self, samples: usize) -> Result<()> {
        if samples == 0 {
            return Err(DmocError::EmptyDataSet);
        }
        if self.clusters == 0 || self.max_iters == 0 || !(self.tolerance >= 0.0) {
            return Err(DmocError::InvalidParameter(
                "need clusters >= 1, max_iters >= 1 and tolerance >= 0".into(),
            ));
        }
        if self.clusters > samples {
            return Err(DmocError::TooManyClusters { clusters: self.clusters, samples });
        }
        Ok(())
    }
}

fn check_data<M: DecisionMetric + ?Sized>(metric: &M, data: &DataSet) -> Result<()> {
    if data.is_empty() {
        return Err(DmocError::EmptyDataSet);
    }
    if data.dim() != metric.data_dim() {
        return Err(DmocError::DimensionMismatch { expected: metric.data_dim(), found: data.dim() });
    }
    Ok(())
}

fn check_reps<M: DecisionMetric + ?Sized>(metric: &M, reps: &[DecisionVector]) -> Result<()> {
    if reps.is_empty() {
        return Err(DmocError::InvalidParameter("no representatives".into()));
    }
    for (m, rep) in reps.iter().enumerate() {
        if rep.len() != metric.decision_dim() {
            return Err(DmocError::DimensionMismatch { expected: metric.decision_dim(), found: rep.len() });
        }
        if !metric.is_feasible(rep) {
            return Err(DmocError::Infeasible(format!("representative {m}: {:?}", &rep[..])));
        }
    }
    Ok(())
}

fn best_index<M: DecisionMetric + ?Sized>(metric: &M, reps: &[DecisionVector], g: &[f64]) -> usize {
    let mut best = (0, f64::NEG_INFINITY);
    for (m, rep) in reps.iter().enumerate() {
        let score = metric.assignment_score(rep, g);
        if score > best.1 {
            best = (m, score);
        }
    }
    best.0
}

/// Assigns each sample to the representative scoring highest for it; ties
/// go to the lowest cluster index.
pub fn assign_clusters<M: DecisionMetric + ?Sized>(
    metric: &M,
    data: &DataSet,
    reps: &[DecisionVector],
) -> Result<Partition> {
    check_data(metric, data)?;
    check_reps(metric, reps)?;
    let assignment: Vec<usize> = (0..data.len())
        .into_par_iter()
        .map(|n| best_index(metric, reps, data.sample(n)))
        .collect();
    Partition::new(assignment, reps.len())
}

/// Best decision for every cluster of `partition`. Empty clusters are an
/// error here; the engine repairs them before updating.
pub fn update_representatives<M: DecisionMetric + ?Sized>(
    metric: &M,
    data: &DataSet,
    partition: &Partition,
) -> Result<Vec<DecisionVector>> {
    update_inner(metric, data, partition, None)
}

fn update_inner<M: DecisionMetric + ?Sized>(
    metric: &M,
    data: &DataSet,
    partition: &Partition,
    fallback: Option<&[DecisionVector]>,
) -> Result<Vec<DecisionVector>> {
    check_data(metric, data)?;
    if partition.len() != data.len() {
        return Err(DmocError::SizeMismatch { expected: data.len(), found: partition.len() });
    }
    let members = partition.members();
    let solved: Vec<Result<DecisionVector>> = members
        .par_iter()
        .enumerate()
        .map(|(m, set)| {
            if set.is_empty() {
                return match fallback {
                    Some(prev) => Ok(prev[m].clone()),
                    None => Err(DmocError::EmptyCluster.in_cluster(m)),
                };
            }
            let rows: Vec<&[f64]> = set.iter().map(|&n| data.sample(n)).collect();
            metric.best_decision(&rows).map_err(|e| e.in_cluster(m))
        })
        .collect();
    solved.into_iter().collect()
}

fn per_sample_utilities<M: DecisionMetric + ?Sized>(
    metric: &M,
    data: &DataSet,
    partition: &Partition,
    reps: &[DecisionVector],
) -> Vec<f64> {
    (0..data.len())
        .into_par_iter()
        .map(|n| metric.utility(&reps[partition.cluster_of(n)], data.sample(n)))
        .collect()
}

/// Total utility of a partition and its representatives, summed in sample order.
pub fn objective<M: DecisionMetric + ?Sized>(
    metric: &M,
    data: &DataSet,
    partition: &Partition,
    reps: &[DecisionVector],
) -> f64 {
    per_sample_utilities(metric, data, partition, reps).into_iter().sum()
}

/// Re-seeds representatives of empty clusters at the optimal decision of the
/// worst-served sample, then reassigns once.
fn repair_empty<M: DecisionMetric + ?Sized>(
    metric: &M,
    data: &DataSet,
    partition: Partition,
    reps: &mut [DecisionVector],
) -> Result<Partition> {
    let sizes = partition.sizes();
    if sizes.iter().all(|&s| s > 0) {
        return Ok(partition);
    }
    let mut scores = per_sample_utilities(metric, data, &partition, reps);
    for m in (0..sizes.len()).filter(|&m| sizes[m] == 0) {
        let mut worst = (0, f64::INFINITY);
        for (n, &s) in scores.iter().enumerate() {
            if s < worst.1 {
                worst = (n, s);
            }
        }
        let n = worst.0;
        log::debug!("cluster {m} empty, re-seeding from sample {n}");
        reps[m] = metric.best_decision(&[data.sample(n)]).map_err(|e| e.in_cluster(m))?;
        scores[n] = f64::INFINITY;
    }
    assign_clusters(metric, data, reps)
}

/// One assignment step followed by one representative update.
pub fn iterate_once<M: DecisionMetric + ?Sized>(
    metric: &M,
    data: &DataSet,
    reps: &[DecisionVector],
) -> Result<(Partition, Vec<DecisionVector>)> {
    let mut reps = reps.to_vec();
    let partition = assign_clusters(metric, data, &reps)?;
    let partition = repair_empty(metric, data, partition, &mut reps)?;
    let updated = update_inner(metric, data, &partition, Some(&reps))?;
    Ok((partition, updated))
}

/// Initial representative decisions for `config`.
pub fn initial_decisions<M: DecisionMetric + ?Sized>(
    metric: &M,
    data: &DataSet,
    config: &EngineConfig,
) -> Result<Vec<DecisionVector>> {
    config.validate(data.len())?;
    check_data(metric, data)?;
    match &config.init {
        Init::FromDecisions(reps) => {
            if reps.len() != config.clusters {
                return Err(DmocError::InvalidParameter(format!(
                    "{} initial decisions for {} clusters",
                    reps.len(),
                    config.clusters
                )));
            }
            Ok(reps.clone())
        }
        Init::Random => {
            let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
            let picks = rand::seq::index::sample(&mut rng, data.len(), config.clusters).into_vec();
            let solved: Vec<Result<DecisionVector>> = picks
                .par_iter()
                .enumerate()
                .map(|(m, &n)| metric.best_decision(&[data.sample(n)]).map_err(|e| e.in_cluster(m)))
                .collect();
            solved.into_iter().collect()
        }
        Init::FromKmeansPipeline => {
            baselines::kmc_pipeline(metric, data, config.clusters, config.seed).map(|r| r.representatives)
        }
    }
}

/// Runs the alternating optimization to convergence or the iteration cap.
pub fn run_dmoc<M: DecisionMetric + ?Sized>(
    metric: &M,
    data: &DataSet,
    config: &EngineConfig,
) -> Result<ClusteringResult> {
    metric.validate()?;
    let mut reps = initial_decisions(metric, data, config)?;
    let mut partition = assign_clusters(metric, data, &reps)?;
    let initial = objective(metric, data, &partition, &reps);

    let mut objectives = Vec::with_capacity(config.max_iters);
    let mut previous = initial;
    let mut converged = false;
    for q in 1..=config.max_iters {
        if q > 1 {
            partition = assign_clusters(metric, data, &reps)?;
        }
        partition = repair_empty(metric, data, partition, &mut reps)?;
        reps = update_inner(metric, data, &partition, Some(&reps))?;
        let current = objective(metric, data, &partition, &reps);
        objectives.push(current);
        log::debug!("iteration {q}: objective {current}");
        if current - previous <= config.tolerance {
            converged = true;
            break;
        }
        previous = current;
    }

    let objective = *objectives.last().expect("at least one iteration runs");
    Ok(ClusteringResult {
        partition,
        representatives: reps,
        objective,
        trace: RunTrace {
            initial,
            iterations_run: objectives.len(),
            objectives,
            converged,
        },
    })
}
