use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("grid spacing {spacing:e} too coarse to resolve the mollifier at eps = {eps:e} (need <= {limit:e})")]
    Resolution { spacing: f64, eps: f64, limit: f64 },

    #[error("representatives live on different grids")]
    GridMismatch,

    #[error("operands belong to different Fock bases")]
    BasisMismatch,

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("quadrature failure: {0}")]
    Quadrature(String),

    #[error("error budget exceeded: partial value {partial}, estimated error {error:e} > tol {tol:e}")]
    BudgetExceeded { partial: f64, error: f64, tol: f64 },

    #[error("representative has no declared bound")]
    Unbounded,

    #[error("negative sample {value} at eps = {eps:e}; average requires R >= 0")]
    NegativeSample { eps: f64, value: f64 },

    #[error("state is not normalized: norm = {0}")]
    NotNormalized(f64),

    #[error("basis dimension {dim} exceeds the budget of {cap}")]
    DimensionBudget { dim: usize, cap: usize },

    #[error("evaluation point {0:?} is not on the quadrature grid")]
    OffGrid(Vec<f64>),

    #[error("integration step rejected: unitarity defect {defect:e} exceeds {limit:e}")]
    StepRejected { defect: f64, limit: f64 },

    #[error("assembled operator is not Hermitian (defect {0:e})")]
    NotHermitian(f64),

    #[error("linear algebra failure: {0}")]
    Linalg(String),
}

impl Error {
    /// Budget-type failures: the computation ran but could not meet its
    /// accuracy or size budget.
    pub fn is_budget(&self) -> bool {
        matches!(
            self,
            Error::BudgetExceeded { .. } | Error::DimensionBudget { .. } | Error::StepRejected { .. }
        )
    }
}

impl From<ndarray_linalg::error::LinalgError> for Error {
    fn from(e: ndarray_linalg::error::LinalgError) -> Self {
        Error::Linalg(e.to_string())
    }
}

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidArgument(msg.into())
}
