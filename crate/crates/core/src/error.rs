use thiserror::Error;

pub type Result<T> = std::result::Result<T, DrsError>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DrsError {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("dimension mismatch: expected {expected}, got {found} ({context})")]
    DimensionMismatch {
        expected: usize,
        found: usize,
        context: &'static str,
    },

    #[error("non-finite iterate at iteration {iteration}")]
    NonFinite { iteration: usize },

    #[error("matrix is not symmetric (max asymmetry {asymmetry:e})")]
    NotSymmetric { asymmetry: f64 },

    #[error("Jacobi eigensolver did not converge in {sweeps} sweeps")]
    EigenNoConvergence { sweeps: usize },

    #[error("factorization failed: {0}")]
    Factorization(String),

    #[error("rank deficient constraint matrix: pivot {pivot:e} below threshold {threshold:e}; remove redundant rows")]
    RankDeficient { pivot: f64, threshold: f64 },

    #[error("reference solve did not reach tolerance {tol:e} within {iters} iterations (last residual {residual:e}); raise the iteration cap")]
    ReferenceNotConverged { tol: f64, iters: usize, residual: f64 },

    #[error("missing objective values: {0}")]
    MissingObjective(String),

    #[error("rate optimization failed: {0}")]
    RateOptimization(String),

    #[error("csv output: {0}")]
    Csv(String),
}

impl From<csv::Error> for DrsError {
    fn from(e: csv::Error) -> Self {
        DrsError::Csv(e.to_string())
    }
}

impl From<std::io::Error> for DrsError {
    fn from(e: std::io::Error) -> Self {
        DrsError::Csv(e.to_string())
    }
}
