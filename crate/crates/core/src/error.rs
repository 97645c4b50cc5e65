use alloc::boxed::Box;
use alloc::string::String;
use alloc::vec::Vec;

use crate::regress::FitResult;

pub type Result<T, E = Error> = core::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("duplicate paper id `{0}`")]
    DuplicateId(String),

    #[error("citing paper `{0}` is not in the corpus")]
    UnknownCiting(String),

    #[error("corpus validation failed: {}", .0.join("; "))]
    ValidationFailed(Vec<String>),

    #[error("key not found: {0}")]
    KeyNotFound(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("design matrix is rank deficient; collinear columns: {}", .0.join(", "))]
    SingularDesign(Vec<String>),

    #[error("complete or quasi-complete separation: coefficient `{name}` diverged to {value:.3}")]
    SeparationDetected { name: String, value: f64 },

    #[error("no convergence after {} iterations", .0.iterations)]
    NotConverged(Box<FitResult>),

    #[error("cluster-robust covariance needs at least 2 clusters, found {0}")]
    TooFewClusters(usize),

    #[error("specification mismatch: {0}")]
    SpecMismatch(String),

    #[error("robustness sweep needs {needed} ranked countries, found {found}")]
    InsufficientCountries { needed: usize, found: usize },
}
