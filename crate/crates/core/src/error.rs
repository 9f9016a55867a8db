use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),

    #[error("grid mismatch between operands")]
    GridMismatch,

    #[error("cylinder below grid resolution")]
    EmptyFootprint,

    #[error("cylinder wraps period")]
    WrapsPeriod,

    #[error("invalid exponent: {0}")]
    InvalidExponent(String),

    #[error("exponent configuration infeasible: {0}")]
    InfeasibleExponents(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("declared sup-norm bound {declared} exceeded by generated coefficients ({actual})")]
    BoundExceeded { declared: f64, actual: f64 },

    #[error("coercivity parameter delta={delta} outside (0, {limit})")]
    DeltaOutOfRange { delta: f64, limit: f64 },

    #[error("solver did not converge within {iterations} iterations (last residual {last:.3e})")]
    NoConvergence { iterations: usize, last: f64, history: Vec<f64> },

    #[error("cutoff support check failed: {0}")]
    SupportCheck(String),

    #[error("unverified solution triple: weak residual {residual:.3e} exceeds {tol:.3e}")]
    UnverifiedSolution { residual: f64, tol: f64 },

    #[error("negative values in nonnegative input (min {0:.3e})")]
    NegativeInput(f64),

    #[error("weight integrates to zero")]
    ZeroWeight,

    #[error("bad field file: {0}")]
    Format(String),

    #[error("config error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
