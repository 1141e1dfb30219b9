use thiserror::Error;

#[derive(Error, Debug, Clone, PartialEq)]
pub enum Error {
    #[error("{0} is not an odd prime")]
    InvalidPrime(u64),
    #[error("precision exhausted: the available digits do not determine the answer")]
    PrecisionExhausted,
    #[error("division by zero")]
    DivisionByZero,
    #[error("sequence is unbounded, mean value at infinity undefined")]
    Unbounded,
    #[error("set outside the supported class: {0}")]
    UnsupportedSet(String),
    #[error("subgroup is not contained in the required power group")]
    InvalidSubgroup,
    #[error("internal inconsistency: {0}")]
    InternalInconsistency(String),
    #[error("no stabilization within the refinement bound")]
    NoStabilization,
    #[error("depth too small: no periodic pattern stabilized")]
    DepthTooSmall,
    #[error("condition (*) violated: a fiber through the base point meets the germ")]
    ConditionStarViolated,
}
