//! Conventional clustering: Lloyd's k-means in data space, then one optimal
//! decision per centroid.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::engine;
use crate::error::{DmocError, Result};
use crate::metric::{squared_distance, DecisionMetric};
use crate::types::{mean_of, ClusteringResult, DataSet, DecisionVector, Partition, RunTrace};

/// Iteration cap used by the pipeline.
pub const KMEANS_MAX_ITERS: usize = 300;

#[derive(Debug, Clone, PartialEq)]
pub struct KmeansResult {
    pub centroids: Vec<Vec<f64>>,
    pub assignment: Partition,
    /// Sum of squared distances to the assigned centroids.
    pub inertia: f64,
    /// Inertia after each Lloyd iteration.
    pub inertia_history: Vec<f64>,
    pub iterations: usize,
}

fn nearest(centroids: &[Vec<f64>], g: &[f64]) -> usize {
    let mut best = (0, f64::INFINITY);
    for (m, c) in centroids.iter().enumerate() {
        let d = squared_distance(c, g);
        if d < best.1 {
            best = (m, d);
        }
    }
    best.0
}

fn assign(data: &DataSet, centroids: &[Vec<f64>]) -> Vec<usize> {
    (0..data.len())
        .into_par_iter()
        .map(|n| nearest(centroids, data.sample(n)))
        .collect()
}

fn inertia(data: &DataSet, assignment: &[usize], centroids: &[Vec<f64>]) -> f64 {
    data.iter()
        .zip(assignment)
        .map(|(g, &m)| squared_distance(&centroids[m], g))
        .sum()
}

/// One Lloyd iteration: nearest-centroid assignment, then centroid means.
/// A centroid left without samples jumps to the sample farthest from its
/// own centroid, and the assignment is recomputed once before averaging.
pub fn lloyd_step(data: &DataSet, centroids: &[Vec<f64>]) -> Result<(Partition, Vec<Vec<f64>>)> {
    let mut centroids = centroids.to_vec();
    let mut assignment = assign(data, &centroids);
    let mut sizes = vec![0usize; centroids.len()];
    assignment.iter().for_each(|&m| sizes[m] += 1);
    if sizes.contains(&0) {
        let mut distances: Vec<f64> = data
            .iter()
            .zip(&assignment)
            .map(|(g, &m)| squared_distance(&centroids[m], g))
            .collect();
        for m in (0..centroids.len()).filter(|&m| sizes[m] == 0) {
            let mut far = (0, f64::NEG_INFINITY);
            for (n, &d) in distances.iter().enumerate() {
                if d > far.1 {
                    far = (n, d);
                }
            }
            centroids[m] = data.sample(far.0).to_vec();
            distances[far.0] = f64::NEG_INFINITY;
        }
        assignment = assign(data, &centroids);
    }
    let partition = Partition::new(assignment, centroids.len())?;
    let updated = partition
        .members()
        .iter()
        .enumerate()
        .map(|(m, set)| {
            if set.is_empty() {
                centroids[m].clone()
            } else {
                mean_of(set.iter().map(|&n| data.sample(n)), data.dim())
            }
        })
        .collect();
    Ok((partition, updated))
}

/// Lloyd iterations from the given centroids until the assignment stops
/// changing or `max_iters` is reached.
pub fn kmeans_from(data: &DataSet, centroids: Vec<Vec<f64>>, max_iters: usize) -> Result<KmeansResult> {
    if data.is_empty() {
        return Err(DmocError::EmptyDataSet);
    }
    if centroids.is_empty() || centroids.iter().any(|c| c.len() != data.dim()) {
        return Err(DmocError::InvalidParameter("centroids must match the data dimension".into()));
    }
    let mut centroids = centroids;
    let mut previous: Option<Partition> = None;
    let mut history = Vec::new();
    let mut iterations = 0;
    for _ in 0..max_iters.max(1) {
        let (partition, updated) = lloyd_step(data, &centroids)?;
        iterations += 1;
        centroids = updated;
        history.push(inertia(data, partition.assignment(), &centroids));
        let done = previous.as_ref() == Some(&partition);
        previous = Some(partition);
        if done {
            break;
        }
    }
    let assignment = previous.expect("at least one iteration");
    Ok(KmeansResult {
        inertia: *history.last().expect("at least one iteration"),
        centroids,
        assignment,
        inertia_history: history,
        iterations,
    })
}

/// k-means++ seeding: the first centroid is uniform, each next one is drawn
/// with probability proportional to its squared distance to the chosen set.
pub fn kmeans_plus_plus(data: &DataSet, clusters: usize, seed: u64) -> Result<Vec<Vec<f64>>> {
    if data.is_empty() {
        return Err(DmocError::EmptyDataSet);
    }
    if clusters == 0 || clusters > data.len() {
        return Err(DmocError::TooManyClusters { clusters, samples: data.len() });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut chosen = vec![rng.gen_range(0..data.len())];
    let mut dist: Vec<f64> = data.iter().map(|g| squared_distance(g, data.sample(chosen[0]))).collect();
    while chosen.len() < clusters {
        let total: f64 = dist.iter().sum();
        let pick = if total > 0.0 {
            let mut target = rng.gen::<f64>() * total;
            let mut pick = None;
            for (n, &d) in dist.iter().enumerate() {
                if d > 0.0 {
                    pick = Some(n);
                    if target < d {
                        break;
                    }
                    target -= d;
                }
            }
            pick.expect("positive total has a positive entry")
        } else {
            // all remaining samples coincide with chosen ones
            let free: Vec<usize> = (0..data.len()).filter(|n| !chosen.contains(n)).collect();
            free[rng.gen_range(0..free.len())]
        };
        chosen.push(pick);
        for (n, g) in data.iter().enumerate() {
            dist[n] = dist[n].min(squared_distance(g, data.sample(pick)));
        }
    }
    Ok(chosen.into_iter().map(|n| data.sample(n).to_vec()).collect())
}

pub fn kmeans(data: &DataSet, clusters: usize, seed: u64, max_iters: usize) -> Result<KmeansResult> {
    let init = kmeans_plus_plus(data, clusters, seed)?;
    kmeans_from(data, init, max_iters)
}

/// Cluster in data space with k-means, then use the optimal decision of each
/// centroid as the cluster representative. The objective is the true utility
/// of those decisions on the samples.
pub fn kmc_pipeline<M: DecisionMetric + ?Sized>(
    metric: &M,
    data: &DataSet,
    clusters: usize,
    seed: u64,
) -> Result<ClusteringResult> {
    if data.dim() != metric.data_dim() {
        return Err(DmocError::DimensionMismatch { expected: metric.data_dim(), found: data.dim() });
    }
    let km = kmeans(data, clusters, seed, KMEANS_MAX_ITERS)?;
    let solved: Vec<Result<DecisionVector>> = km
        .centroids
        .par_iter()
        .enumerate()
        .map(|(m, c)| metric.best_decision(&[c.as_slice()]).map_err(|e| e.in_cluster(m)))
        .collect();
    let representatives = solved.into_iter().collect::<Result<Vec<_>>>()?;
    let objective = engine::objective(metric, data, &km.assignment, &representatives);
    Ok(ClusteringResult {
        partition: km.assignment,
        representatives,
        objective,
        trace: RunTrace {
            initial: objective,
            objectives: vec![objective],
            iterations_run: km.iterations,
            converged: km.iterations < KMEANS_MAX_ITERS,
        },
    })
}
