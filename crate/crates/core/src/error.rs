use thiserror::Error;

/// Every failure the engine can report.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Error {
    #[error("division by zero in finite field")]
    DivisionByZero,
    #[error("finite field elements come from different contexts")]
    ContextMismatch,
    #[error("invalid finite field: {0}")]
    InvalidField(String),
    #[error("invalid field shape: {0}")]
    InvalidShape(String),
    #[error("unknown index `{0}`")]
    UnknownIndex(String),
    #[error("weight vector has length {found}, expected {expected}")]
    WeightLength { expected: usize, found: usize },
    #[error("weight is not of the form k'' for prime {prime}: p does not divide entry {index}")]
    NonDivisibleWeight { prime: String, index: String },
    #[error("exponent model is inconsistent: {0}")]
    ModelInconsistent(String),
    #[error("exponent has {found} coordinates, model rank is {expected}")]
    ExponentRank { expected: usize, found: usize },
    #[error("exponent {0} is not totally positive")]
    NotTotallyPositive(String),
    #[error("exponent {exponent} has trace {trace} beyond the truncation bound {bound}")]
    OutsideWindow {
        exponent: String,
        trace: i64,
        bound: String,
    },
    #[error("weights differ: {0}")]
    WeightMismatch(String),
    #[error("expansions live on different models or truncation bounds")]
    ModelMismatch,
    #[error("truncation bound too small: {0}")]
    TruncationTooSmall(String),
    #[error("expansion is not in the kernel of theta: coefficient at {0} lies off the scaled lattice")]
    NotInKernel(String),
    #[error("{0} is not a totally positive unit")]
    NotAUnit(String),
    #[error("operation not supported by this model: {0}")]
    Unsupported(String),
    #[error("exactness probe not applicable at weight {0}")]
    NotApplicable(String),
    #[error("integer overflow in {0}")]
    Overflow(&'static str),
    #[error("config error: {0}")]
    Config(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
