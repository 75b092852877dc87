use thiserror::Error;

pub type Result<T> = std::result::Result<T, DmocError>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum DmocError {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("infeasible decision: {0}")]
    Infeasible(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("invalid data: {0}")]
    InvalidData(String),

    #[error("empty data set")]
    EmptyDataSet,

    #[error("cluster has no members")]
    EmptyCluster,

    #[error("requested {clusters} clusters for only {samples} samples")]
    TooManyClusters { clusters: usize, samples: usize },

    #[error("partition covers {found} samples but data set has {expected}")]
    SizeMismatch { expected: usize, found: usize },

    #[error("solver failed on cluster {cluster}: {source}")]
    Cluster {
        cluster: usize,
        #[source]
        source: Box<DmocError>,
    },

    #[error("solver failure: {0}")]
    Solver(String),

    #[error("perfect objective is zero, relative loss undefined")]
    ZeroReference,
}

impl DmocError {
    pub(crate) fn in_cluster(self, cluster: usize) -> Self {
        DmocError::Cluster {
            cluster,
            source: Box::new(self),
        }
    }

    /// True for numerical solver failures, as opposed to bad input.
    pub fn is_solver_failure(&self) -> bool {
        match self {
            DmocError::Solver(_) => true,
            DmocError::Cluster { source, .. } => source.is_solver_failure(),
            _ => false,
        }
    }
}
