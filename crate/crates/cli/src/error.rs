use dmoc_core::DmocError;
use thiserror::Error;

use crate::csvio::LoadError;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{0}")]
    Data(String),
    #[error("{0}")]
    Solver(String),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 1,
            CliError::Data(_) | CliError::Io(_) => 2,
            CliError::Solver(_) => 3,
        }
    }
}

impl From<LoadError> for CliError {
    fn from(e: LoadError) -> Self {
        CliError::Data(e.to_string())
    }
}

impl From<DmocError> for CliError {
    fn from(e: DmocError) -> Self {
        if e.is_solver_failure() {
            return CliError::Solver(e.to_string());
        }
        match e {
            DmocError::InvalidParameter(_) | DmocError::TooManyClusters { .. } => CliError::Usage(e.to_string()),
            _ => CliError::Data(e.to_string()),
        }
    }
}
