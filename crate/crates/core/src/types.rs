use std::ops::Deref;

use serde::{Deserialize, Serialize};

use crate::error::{DmocError, Result};

/// A collection of `N` nonnegative samples of common dimension `d`, stored
/// row-major in one buffer.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DataSet {
    dim: usize,
    values: Vec<f64>,
}

impl DataSet {
    /// Builds a data set from rows, inferring the dimension from the first row.
    pub fn new(rows: Vec<Vec<f64>>) -> Result<Self> {
        let dim = rows.first().map(Vec::len).ok_or(DmocError::EmptyDataSet)?;
        Self::with_dim(dim, rows)
    }

    /// Builds a data set of known dimension. Zero rows are accepted here;
    /// the operations that need samples reject such sets themselves.
    pub fn with_dim(dim: usize, rows: Vec<Vec<f64>>) -> Result<Self> {
        if dim == 0 {
            return Err(DmocError::InvalidData("sample dimension must be positive".into()));
        }
        let mut values = Vec::with_capacity(dim * rows.len());
        for (n, row) in rows.into_iter().enumerate() {
            if row.len() != dim {
                return Err(DmocError::InvalidData(format!(
                    "sample {n} has length {}, expected {dim}",
                    row.len()
                )));
            }
            if let Some((t, v)) = row.iter().enumerate().find(|(_, v)| !v.is_finite() || **v < 0.0) {
                return Err(DmocError::InvalidData(format!(
                    "sample {n} entry {t} is {v}; entries must be finite and nonnegative"
                )));
            }
            values.extend(row);
        }
        Ok(Self { dim, values })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.values.len() / self.dim
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn sample(&self, n: usize) -> &[f64] {
        &self.values[n * self.dim..(n + 1) * self.dim]
    }

    pub fn iter(&self) -> impl ExactSizeIterator<Item = &[f64]> + '_ {
        self.values.chunks_exact(self.dim)
    }

    pub fn rows(&self) -> Vec<Vec<f64>> {
        self.iter().map(<[f64]>::to_vec).collect()
    }

    /// Coordinate-wise mean of the listed samples, accumulated in the order given.
    pub fn mean_of(&self, members: &[usize]) -> Vec<f64> {
        mean_of(members.iter().map(|&n| self.sample(n)), self.dim)
    }
}

pub(crate) fn mean_of<'a>(rows: impl Iterator<Item = &'a [f64]>, dim: usize) -> Vec<f64> {
    let mut acc = vec![0.0; dim];
    let mut count = 0usize;
    for row in rows {
        for (a, v) in acc.iter_mut().zip(row) {
            *a += v;
        }
        count += 1;
    }
    if count > 0 {
        let scale = count as f64;
        acc.iter_mut().for_each(|a| *a /= scale);
    }
    acc
}

/// A point of the decision space (a price profile or a consumption profile).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecisionVector(Vec<f64>);

impl DecisionVector {
    pub fn new(values: Vec<f64>) -> Self {
        Self(values)
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }
}

impl Deref for DecisionVector {
    type Target = [f64];

    fn deref(&self) -> &[f64] {
        &self.0
    }
}

impl From<Vec<f64>> for DecisionVector {
    fn from(values: Vec<f64>) -> Self {
        Self(values)
    }
}

/// Assignment of every sample to one of `clusters` clusters (0-based).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Partition {
    assignment: Vec<usize>,
    clusters: usize,
}

impl Partition {
    pub fn new(assignment: Vec<usize>, clusters: usize) -> Result<Self> {
        if clusters == 0 {
            return Err(DmocError::InvalidParameter("cluster count must be positive".into()));
        }
        if let Some(&m) = assignment.iter().find(|&&m| m >= clusters) {
            return Err(DmocError::InvalidParameter(format!(
                "cluster index {m} out of range for {clusters} clusters"
            )));
        }
        Ok(Self { assignment, clusters })
    }

    pub fn clusters(&self) -> usize {
        self.clusters
    }

    pub fn len(&self) -> usize {
        self.assignment.len()
    }

    pub fn is_empty(&self) -> bool {
        self.assignment.is_empty()
    }

    pub fn assignment(&self) -> &[usize] {
        &self.assignment
    }

    pub fn cluster_of(&self, n: usize) -> usize {
        self.assignment[n]
    }

    /// The index sets `N_m`, each in increasing sample order.
    pub fn members(&self) -> Vec<Vec<usize>> {
        let mut sets = vec![Vec::new(); self.clusters];
        for (n, &m) in self.assignment.iter().enumerate() {
            sets[m].push(n);
        }
        sets
    }

    pub fn sizes(&self) -> Vec<usize> {
        let mut sizes = vec![0; self.clusters];
        for &m in &self.assignment {
            sizes[m] += 1;
        }
        sizes
    }
}

/// Objective values `A_q` of the alternating iterations.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunTrace {
    /// Objective of the initial decisions after one assignment.
    pub initial: f64,
    pub objectives: Vec<f64>,
    pub iterations_run: usize,
    pub converged: bool,
}

impl RunTrace {
    pub fn is_nondecreasing(&self, slack: f64) -> bool {
        std::iter::once(&self.initial)
            .chain(&self.objectives)
            .zip(&self.objectives)
            .all(|(prev, next)| *next >= *prev - slack)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClusteringResult {
    pub partition: Partition,
    pub representatives: Vec<DecisionVector>,
    pub objective: f64,
    pub trace: RunTrace,
}

impl ClusteringResult {
    pub fn clusters(&self) -> usize {
        self.representatives.len()
    }

    /// Decision applied to sample `n`.
    pub fn decision_for(&self, n: usize) -> &DecisionVector {
        &self.representatives[self.partition.cluster_of(n)]
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn rejects_negative_and_nan() {
        assert!(DataSet::new(vec![vec![1.0, -0.5]]).is_err());
        assert!(DataSet::new(vec![vec![f64::NAN]]).is_err());
        assert!(DataSet::new(vec![vec![1.0], vec![1.0, 2.0]]).is_err());
        assert_eq!(DataSet::new(vec![]), Err(DmocError::EmptyDataSet));
        assert!(DataSet::with_dim(3, vec![]).unwrap().is_empty());
    }

    #[test]
    fn mean_of_members() {
        let data = DataSet::new(vec![vec![1.0, 2.0], vec![3.0, 6.0], vec![100.0, 100.0]]).unwrap();
        assert_eq!(data.mean_of(&[0, 1]), vec![2.0, 4.0]);
    }

    #[test]
    fn partition_rejects_out_of_range() {
        assert!(Partition::new(vec![0, 2], 2).is_err());
        assert!(Partition::new(vec![], 0).is_err());
    }

    proptest! {
        #[test]
        fn members_form_disjoint_cover(assignment in proptest::collection::vec(0usize..6, 1..60)) {
            let partition = Partition::new(assignment.clone(), 6).unwrap();
            let members = partition.members();
            let mut seen = vec![0u32; assignment.len()];
            for (m, set) in members.iter().enumerate() {
                for &n in set {
                    prop_assert_eq!(assignment[n], m);
                    seen[n] += 1;
                }
            }
            prop_assert!(seen.iter().all(|&c| c == 1));
            prop_assert_eq!(partition.sizes().iter().sum::<usize>(), assignment.len());
        }
    }
}
