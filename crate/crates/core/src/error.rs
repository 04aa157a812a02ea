use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("nodes `{0}` and `{1}` share a position; pathloss is undefined")]
    CoincidentNodes(String, String),

    #[error("dimension mismatch in {what}: expected {expected}, got {got}")]
    DimensionMismatch {
        what: &'static str,
        expected: usize,
        got: usize,
    },

    #[error("IRS parameter {index} = {value} lies outside [{lo}, {hi}]")]
    InfeasibleParams {
        index: usize,
        value: f64,
        lo: f64,
        hi: f64,
    },

    #[error("power multiplier search failed to bracket a root (upper bound {upper:e})")]
    MultiplierBracket { upper: f64 },

    #[error("non-finite value encountered in {0}")]
    NonFinite(&'static str),

    #[error("prox subproblem did not converge: residual {residual:e} after {iterations} iterations")]
    ProxNotConverged { residual: f64, iterations: usize },

    #[error("trace length mismatch: {0} vs {1}")]
    TraceLength(usize, usize),

    #[error("schedule has no budget for iteration {0}")]
    UndefinedIndex(usize),

    #[error("malformed input: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}
