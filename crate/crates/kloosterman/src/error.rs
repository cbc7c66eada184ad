use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("{0} is not prime")]
    NonPrime(u64),
    #[error("field order {0} exceeds the table budget ({1})")]
    TableBudget(u64, u64),
    #[error("inversion of zero")]
    ZeroInverse,
    #[error("negative power of zero")]
    ZeroToNegativePower,
    #[error("element does not lie in the requested subfield")]
    NotInSubfield,
    #[error("incompatible fields: {0}")]
    IncompatibleFields(String),
    #[error("etale algebra must have degree at least 2 (got {0})")]
    DegreeTooSmall(u32),
    #[error("factor degrees must be at least 1")]
    ZeroFactorDegree,
    #[error("internal invariant violated: {0}")]
    Internal(String),
    #[error("element is not a unit (zero coordinate)")]
    NotAUnit,
    #[error("norm target must be a nonzero base-field element")]
    ZeroNormTarget,
    #[error("coordinate count {got} does not match factor count {want}")]
    CoordCount { got: usize, want: usize },
    #[error("character exponent count {got} does not match factor count {want}")]
    ExpCount { got: usize, want: usize },
    #[error("additive character twist must be nonzero")]
    TrivialTwist,
    #[error("cannot promote a value of conductor {0} into conductor {1}")]
    ConductorMismatch(u64, u64),
    #[error("cyclotomic conductor {0} exceeds the budget ({1})")]
    ConductorBudget(u128, u64),
    #[error("mismatched algebra or field between character and argument")]
    MismatchedAlgebra,
    #[error("coefficient slot count {got} does not match family ({want})")]
    SlotCount { got: usize, want: usize },
    #[error("twist count {got} does not match variable count {want}")]
    TwistCount { got: usize, want: usize },
    #[error("coefficient slots must all be nonzero")]
    ZeroCoefficient,
    #[error("family parameter w must be a nonzero field element")]
    ZeroParameter,
    #[error("hull is not full-dimensional")]
    DegenerateHull,
    #[error("config error: {0}")]
    Config(String),
    #[error("cell budget exceeded: {0}")]
    Budget(String),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
