use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// Errors shared by every module in the crate.
#[derive(Debug, Error)]
pub enum Error {
    #[error("empty input: {0}")]
    EmptyInput(&'static str),

    #[error("dimension mismatch in {context}: expected {expected}, got {got}")]
    DimensionMismatch {
        context: &'static str,
        expected: usize,
        got: usize,
    },

    #[error("non-finite value encountered in {0}")]
    NonFinite(&'static str),

    #[error("weight {value} at index {index} is negative")]
    NegativeWeight { index: usize, value: f64 },

    #[error("weights sum to {sum}, which deviates from 1 by more than {tol}")]
    WeightSum { sum: f64, tol: f64 },

    #[error("exponent {0} exceeds the overflow guard of 700 in natural-log units")]
    Overflow(f64),

    #[error("lookup table has no key matching {0:?}")]
    KeyNotFound(Vec<f64>),

    #[error("duplicate keys while a table lookup is in use")]
    KeyCollision,

    #[error("support sizes differ: {left} vs {right}")]
    UnequalSizes { left: usize, right: usize },

    #[error("assignment distance requires uniform weights on both measures")]
    NonUniformWeights,

    #[error("product support of {atoms} atoms exceeds the cap of {cap}")]
    ProductTooLarge { atoms: usize, cap: usize },

    #[error("measures are not expressed over a common support list")]
    SupportMismatch,

    #[error("transport solver failure: {0}")]
    SolverFailure(String),

    #[error("infeasible problem: {0}")]
    Infeasible(String),

    #[error("degenerate grid: support does not span the ambient dimension")]
    DegenerateGrid,

    #[error("sample budget {given} is below the minimum of {minimum}")]
    SampleBudgetTooSmall { given: usize, minimum: usize },

    #[error("no feasible samples survived projection onto the constraint set")]
    NoFeasibleSamples,

    #[error("potential lower bound underflowed to zero (log-domain value {log_eps})")]
    ZeroEps { log_eps: f64 },

    #[error("all candidate pairs were degenerate (denominator below floor)")]
    AllPairsDegenerate,

    #[error("index {index} out of range for length {len}")]
    IndexOutOfRange { index: usize, len: usize },

    #[error("anchor index {0} is missing from a neighborhood")]
    TNotInNeighborhood(usize),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
