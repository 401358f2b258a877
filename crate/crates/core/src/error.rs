use thiserror::Error;

use crate::lattice::Domain;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),
    #[error("invalid operator: {0}")]
    InvalidOperator(String),
    #[error("functions live on different grids")]
    GridMismatch,
    #[error("expected a function in the {expected:?} domain")]
    DomainMismatch { expected: Domain },
    #[error("non-finite sample at node {index}")]
    NonFinite { index: usize },
    #[error("dense representation unavailable: {0}")]
    DenseUnavailable(String),
    #[error("eigensolver failed: {0}")]
    Eigen(String),
    #[error("only {retained} resolved eigenpairs, need at least {required}")]
    TooFewModes { retained: usize, required: usize },
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("degenerate fit: {0}")]
    DegenerateFit(String),
    #[error("overflow: {0}")]
    Overflow(String),
    #[error("thickness unreachable: {0}")]
    Unreachable(String),
    #[error("conjugate gradient stagnated after {iterations} iterations (relative residual {residual:e})")]
    Stagnation { iterations: usize, residual: f64 },
    #[error("hypotheses violated: {0}")]
    Hypotheses(String),
    #[error("stage {stage} did not contract (residual ratio {ratio:e})")]
    StageNotContracting { stage: usize, ratio: f64 },
    #[error("corrupt eigensystem data: {0}")]
    Corrupt(String),
}
