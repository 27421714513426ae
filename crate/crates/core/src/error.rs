use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("singular basis")]
    SingularBasis,
    #[error("no internal space")]
    NoInternalSpace,
    #[error("invalid input: {0}")]
    Invalid(String),
    #[error("grid under-resolved: {0}")]
    GridUnderResolved(String),
    #[error("quadrature under-resolved: {0}")]
    QuadratureUnderResolved(String),
    #[error("shift out of range: {0}")]
    ShiftOutOfRange(String),
    #[error("incompatible grids: {0}")]
    IncompatibleGrids(String),
    #[error("tail bound {bound:.3e} exceeds tolerance {tol:.3e}")]
    TailBudget { bound: f64, tol: f64 },
    #[error("non-summable kernel tail")]
    NonSummableTail,
    #[error("not a painless frame: {0}")]
    NotPainless(String),
    #[error("model set not generic at this truncation (margin {0:.3e})")]
    NotGeneric(f64),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Invalid(msg.into()))
}
