use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, Error, PartialEq)]
pub enum Error {
    #[error("invalid parameters: {0}")]
    InvalidParams(String),
    #[error("evaluation point within {distance:e} of the boundary (margin {margin:e})")]
    SingularityTooClose { distance: f64, margin: f64 },
    #[error("quadrature error {achieved:e} above target {target:e} at the given budget")]
    BudgetExceeded { achieved: f64, target: f64 },
    #[error("basis index {index} out of range for truncation {len}")]
    IndexOutOfRange { index: usize, len: usize },
    #[error("oracle mismatch at entry ({m},{n}): closed form {closed:e}, quadrature {oracle:e} ± {err:e}")]
    OracleMismatch {
        m: usize,
        n: usize,
        closed: f64,
        oracle: f64,
        err: f64,
    },
    #[error("potential is not finite at r = {r}")]
    PotentialUnbounded { r: f64 },
    #[error("mass matrix is not positive definite")]
    MassNotPD,
    #[error("angular degree {ell} unsupported in dimension {dim}")]
    UnsupportedAngularDegree { dim: usize, ell: usize },
    #[error("truncation unsafe: {0}")]
    TruncationUnsafe(String),
    #[error("Newton iteration did not converge after {iterations} steps (residual {residual:e})")]
    NoConvergence { iterations: usize, residual: f64 },
    #[error("converged to nodal count {found}, requested {requested}")]
    WrongNodalCount { found: usize, requested: usize },
    #[error("converged to the trivial solution (|c| = {norm:e})")]
    TrivialSolution { norm: f64 },
    #[error("solution residual {residual:e} exceeds tolerance {tol:e}")]
    NotConverged { residual: f64, tol: f64 },
    #[error("boundary ratio {psi:e} too close to zero for s = {s}")]
    InadmissibleBoundaryData { psi: f64, s: f64 },
    #[error("direct quadrature unsupported in dimension {0}")]
    DimensionUnsupported(usize),
}
