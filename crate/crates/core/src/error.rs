use thiserror::Error;

/// Errors raised by the library.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("matrix is not Hermitian at ({row}, {col})")]
    NotHermitian { row: usize, col: usize },

    #[error("non-finite matrix entry at ({row}, {col})")]
    NonFinite { row: usize, col: usize },

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("variable index {index} out of range for arity {arity}")]
    IndexOutOfRange { index: usize, arity: usize },

    #[error("Jacobi eigensolver did not converge after {sweeps} sweeps (residual {residual:e})")]
    NoConvergence { sweeps: usize, residual: f64 },

    #[error("rejection sampler stalled: acceptance below {rate:e} after {attempts} attempts; use the Gaussian importance estimator")]
    RejectionStall { attempts: u64, rate: f64 },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("coefficient algebras differ")]
    AlgebraMismatch,

    #[error("missing target for word {0:?} (tracial spec too shallow)")]
    MissingTarget(Vec<usize>),

    #[error("inconsistent tracial targets: {0}")]
    InconsistentTargets(String),

    #[error("map is not strictly monotone on the support near x = {at}")]
    NotMonotone { at: f64 },

    #[error("map derivative {value:e} too close to zero near x = {at}")]
    SingularDerivative { at: f64, value: f64 },

    #[error("evaluation point {x} outside the support [{lo}, {hi}]")]
    OutsideSupport { x: f64, lo: f64, hi: f64 },

    #[error("measure is not normalized: total mass {0}")]
    NotNormalized(f64),

    #[error("operation needs a density, found an atomic measure")]
    NeedsDensity,

    #[error("formal inverse diverges: majorant ratio {ratio} at order {order}")]
    MajorantDivergence { ratio: f64, order: usize },

    #[error("parse error at {pos}: {msg}")]
    Parse { pos: usize, msg: String },

    #[error("document error at line {line}, column {column}: {msg}")]
    Document { line: usize, column: usize, msg: String },

    #[error("infeasible check configuration: {0}")]
    InfeasibleConfig(String),
}

pub type Result<T> = std::result::Result<T, Error>;
