use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum IndexError {
    #[error("index set would hold {cardinality} members, cap is {cap}")]
    CapExceeded { cardinality: u128, cap: usize },
    #[error("invalid index-set parameter: {0}")]
    InvalidParameter(String),
    #[error("cannot parse multi-index {text:?}: {reason}")]
    Parse { text: String, reason: String },
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SeriesError {
    #[error("series live on incompatible index sets")]
    IncompatibleSets,
    #[error("multi-index {0} is outside the index set")]
    OutsideSet(String),
    #[error("reciprocal failed: {0}")]
    Singular(String),
    #[error("composition margin violated: |h| = {norm:.3e} >= iota = {iota:.3e}")]
    MarginViolated { norm: f64, iota: f64 },
    #[error("exponential series not converged after {terms} terms (last term norm {last:.3e})")]
    ExpNotConverged { terms: usize, last: f64 },
    #[error("exponential argument |t| |h| = {0:.3e} above cap {1:.3e}")]
    ExpArgument(f64, f64),
    #[error("invalid frequency basis: {0}")]
    InvalidBasis(String),
    #[error("vector length {got} does not match {expected} frequencies")]
    DimensionMismatch { expected: usize, got: usize },
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum DiophantineError {
    #[error("divisor is undefined for k = 0")]
    ZeroIndex,
    #[error("index set has no nonzero members")]
    EmptySet,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum CohomologyError {
    #[error("right-hand side average {average:.3e} exceeds tolerance {tolerance:.3e}")]
    NonzeroAverage { average: f64, tolerance: f64 },
    #[error("divisor {divisor:.3e} at mode [{mode}] below floor {floor:.3e}")]
    DivisorBelowFloor { mode: String, divisor: f64, floor: f64 },
    #[error("shift order n must be nonzero")]
    ZeroShift,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SolveError {
    #[error(transparent)]
    Series(#[from] SeriesError),
    #[error(transparent)]
    Cohomology(#[from] CohomologyError),
    #[error("divergence at iteration {iteration}: residual {eps:.3e}")]
    Divergence { iteration: usize, eps: f64 },
    #[error("condition number {name} = {value:.3e} past cap {cap:.3e}")]
    ConditionBlowup { name: &'static str, value: f64, cap: f64 },
    #[error("correction norm {norm:.3e} exceeds margin {iota:.3e}")]
    StepTooLarge { norm: f64, iota: f64 },
    #[error("non-finite residual at iteration {0}")]
    NonFinite(usize),
    #[error("average of l*E is {average:.3e}, expected zero (tolerance {tolerance:.3e})")]
    MeanIdentity { average: f64, tolerance: f64 },
    #[error("contraction product (N-)^2 T beta = {0:.3e} is not below 1/2")]
    NoContraction(f64),
    #[error("fixed-point inversion did not converge in {0} iterations")]
    FixedPointNotConverged(usize),
    #[error("invalid model: {0}")]
    InvalidModel(String),
}
