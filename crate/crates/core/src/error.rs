use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),
    #[error("grid mismatch: operands live on different grids")]
    GridMismatch,
    #[error("exponent p = {0} is not allowed: p must satisfy p > 2")]
    InvalidExponent(f64),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("non-finite value at node {node}")]
    NonFinite { node: usize },
    #[error("negative mass {mass} at node {node}")]
    NegativeMass { node: usize, mass: f64 },
    #[error("solver did not converge after {iterations} iterations (residual {residual:e})")]
    NonConvergence { iterations: usize, residual: f64 },
    #[error("infeasible obstacle problem: boundary value below obstacle at node {node} (gap {gap:e})")]
    Infeasible { node: usize, gap: f64 },
    #[error("time level {level}: {source}")]
    StepFailed {
        level: usize,
        #[source]
        source: Box<Error>,
    },
    #[error("linear solve failed: zero pivot in column {0}")]
    SingularMatrix(usize),
    #[error("root not bracketed in [{lo}, {hi}]")]
    RootNotBracketed { lo: f64, hi: f64 },
    #[error("quadrature failed to reach tolerance (estimate {estimate:e}, error {error:e})")]
    Quadrature { estimate: f64, error: f64 },
    #[error("degenerate fit: {0}")]
    DegenerateFit(String),
    #[error("insufficient levels: got {got}, need at least {need}")]
    InsufficientLevels { got: usize, need: usize },
    #[error("no L1-Cauchy subsequence: greedy selection stalled after {selected} picks")]
    NoCauchySubsequence { selected: usize },
    #[error("format error: {0}")]
    Format(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn at_level(self, level: usize) -> Self {
        Error::StepFailed {
            level,
            source: Box::new(self),
        }
    }
}
