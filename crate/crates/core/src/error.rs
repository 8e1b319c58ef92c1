use thiserror::Error;

/// Errors produced by the library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("conductor mismatch: {0} vs {1}")]
    ConductorMismatch(u32, u32),
    #[error("division by zero")]
    DivisionByZero,
    #[error("automorphism exponent {exp} is not coprime to conductor {n}")]
    BadAutomorphism { exp: i64, n: u32 },
    #[error("conductor {0} does not divide lift target {1}")]
    BadLift(u32, u32),
    #[error("element is not in the requested subfield")]
    NotInSubfield,
    #[error("tower validation failed: {0}")]
    TowerValidation(String),
    #[error("not a prime element of the base field: {0}")]
    NotPrime(String),
    #[error("words come from different codes")]
    MixedCodes,
    #[error("empty user subset")]
    EmptySubset,
    #[error("zero word")]
    ZeroWord,
    #[error("element does not have relative norm 1")]
    NormNotOne,
    #[error("no nonzero Hilbert-90 witness among basis candidates")]
    NoWitness,
    #[error("search budget exceeded: needs about {required} nodes, budget is {budget}; restrict bounds or vary a single user")]
    BudgetExceeded { required: u128, budget: u128 },
    #[error("pigeonhole search failed: {0}")]
    Pigeonhole(String),
    #[error("degenerate Gram-Schmidt pivot")]
    DegenerateBasis,
    #[error("matrix is not positive definite")]
    NotPositiveDefinite,
    #[error("need at least 3 samples for a slope fit")]
    TooFewSamples,
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("codebook size {size} exceeds cap {cap}")]
    CodebookTooLarge { size: u128, cap: u128 },
    #[error("curve domains have empty intersection")]
    EmptyDomain,
}

pub type Result<T> = std::result::Result<T, Error>;
