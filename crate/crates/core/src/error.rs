use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParam(String),

    #[error("divergent integral I_m^alpha with m = {m}, alpha = {alpha}: need alpha > -1 and 2m - alpha - 1 > 0")]
    DivergentIntegral { m: f64, alpha: f64 },

    #[error("divergent integral of t^{k}/(1+t)^{m}: need m > k + 1 >= 1")]
    DivergentBeta { k: i64, m: i64 },

    #[error("form is not trace-free: |trace| = {trace:e}")]
    NotTraceFree { trace: f64 },

    #[error("matrix is not symmetric: max asymmetry {asym:e}")]
    NotSymmetric { asym: f64 },

    #[error("dimension mismatch: expected {expected}, got {got}")]
    Dimension { expected: usize, got: usize },

    #[error("index {index} out of range 1..={max}")]
    IndexOutOfRange { index: usize, max: usize },

    #[error("point outside the half-space: t = {0}")]
    NegativeT(f64),

    #[error("linear solver did not converge after {iterations} iterations (relative residual {residual:e})")]
    SolverDiverged { iterations: usize, residual: f64 },

    #[error("operator is not positive definite (curvature {0:e} along a search direction)")]
    Indefinite(f64),

    #[error("truncation radius too small: estimated tail {tail:e} exceeds tolerance {tol:e}")]
    Truncation { tail: f64, tol: f64 },

    #[error("fit rejected: {0}")]
    FitRejected(String),

    #[error("quadrature failed: {0}")]
    Quadrature(String),

    #[error("geometry validation failed: {0}")]
    Geometry(String),

    #[error("profile was solved for a different form (|h - h_ref| = {0:e})")]
    ProfileMismatch(f64),

    #[error("unknown boundary point id {0}")]
    UnknownPoint(usize),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
