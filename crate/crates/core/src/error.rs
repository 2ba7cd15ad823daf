use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid arity {0}: need at least 2")]
    InvalidArity(usize),
    #[error("arity too large: {0} vertices (limit {1})")]
    ArityTooLarge(usize, usize),
    #[error("matrix is not symmetric (max asymmetry {0:e})")]
    NotSymmetric(f64),
    #[error("invalid atom: {0}")]
    InvalidAtom(String),
    #[error("spectrum has {0} distinct clusters, expected exactly 2")]
    NotTwoEigenvalue(usize),
    #[error("spectrum collapses to a single value")]
    Degenerate,
    #[error("atoms do not share a common eigenvalue pair")]
    MixedEigenvalues,
    #[error("atom arity mismatch: expected {expected}, got {got}")]
    ArityMismatch { expected: usize, got: usize },
    #[error("negation model is not balanced for atom `{0}` (its sign flip changes the spectrum)")]
    UnbalancedNegation(String),
    #[error("signing is not balanced: edge {0} violates the cycle condition")]
    NotBalanced(usize),
    #[error("oracle budget exceeded: {0}")]
    BudgetExceeded(String),
    #[error("parameter t={0} is too close to a pole or outside the admissible disc")]
    NearPole(f64),
    #[error("multiplicity {0} is not a nonnegative integer")]
    NonIntegerMultiplicity(f64),
    #[error("cardinality mismatch: {0} vs {1}")]
    CardinalityMismatch(usize, usize),
    #[error("ball would exceed {0} vertices")]
    BallTooLarge(usize),
    #[error("vector support touches the ball boundary (depth {depth} >= radius {radius})")]
    SupportTouchesBoundary { depth: usize, radius: usize },
    #[error("zero vector cannot be normalized")]
    ZeroVector,
    #[error("instance too large for brute force: {0} vertices")]
    TooLarge(usize),
    #[error("parameters outside the model: {0}")]
    OutOfModel(String),
    #[error("eigensolver failed to converge: {0}")]
    NoConvergence(String),
    #[error("non-integral coefficients: exact arithmetic unavailable")]
    NonIntegral,
    #[error("invalid input: {0}")]
    Invalid(String),
    #[error("io: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Io(e.to_string())
    }
}
