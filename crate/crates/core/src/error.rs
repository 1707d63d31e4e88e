use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Error {
    #[error("{0} is not prime")]
    NotPrime(u64),

    #[error("modulus exponent must be at least 1")]
    ZeroExponent,

    #[error("{value} is not invertible modulo {modulus}")]
    NonInvertible { value: String, modulus: String },

    #[error("sum is not p-integral at p = {p} (valuation {valuation})")]
    NotPIntegral { p: u64, valuation: i64 },

    #[error("residue {value} is not divisible by {p}^{k}")]
    NotDivisible { value: String, p: u64, k: u32 },

    #[error("operands live modulo {left} and {right}")]
    MixedModulus { left: String, right: String },

    #[error("moduli {0} and {1} are not coprime")]
    ModuliNotCoprime(String, String),

    #[error("Bernoulli index {index} exceeds bound {bound}")]
    BoundExceeded { index: u64, bound: u64 },

    #[error("weight {w} is not admissible for p = {p}")]
    BadWeight { p: u64, w: u64 },

    #[error("precondition violated: {0}")]
    PreconditionViolated(String),

    #[error("enumeration needs {needed} terms, budget is {budget}; use the convolution evaluator")]
    BudgetExceeded { needed: String, budget: u64 },

    #[error("invalid index: {0}")]
    InvalidIndex(String),

    #[error("invalid constraint set: {0}")]
    InvalidConstraint(String),

    #[error("unknown claim `{0}`")]
    UnknownClaim(String),

    #[error("out of domain: {0}")]
    OutOfDomain(String),

    #[error("Bernoulli factor B_{index} is not {p}-integral")]
    ValuationError { index: u64, p: u64 },

    #[error("prime {p} is too small for weight {w} (need p >= {w} + 2)")]
    PrimeTooSmall { p: u64, w: u64 },

    #[error("lattice basis is singular")]
    SingularInput,

    #[error("windows do not share the same primes and exponent")]
    MismatchedWindows,

    #[error("data inconsistent with a polynomial of degree {degree} at m = {m}")]
    InconsistentData { degree: usize, m: u64 },

    #[error("need at least {needed} data points, got {got}")]
    InsufficientData { needed: usize, got: usize },

    #[error("cache: {0}")]
    Cache(String),
}

pub type Result<T> = std::result::Result<T, Error>;
