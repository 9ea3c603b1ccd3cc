use thiserror::Error;

pub type Result<T> = std::result::Result<T, MdlError>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum MdlError {
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("degenerate design: Gram matrix is singular")]
    DegenerateDesign,
    #[error("invalid luckiness function: {0}")]
    InvalidLuckiness(String),
    #[error("unsupported prior: {0}")]
    UnsupportedPrior(String),
    #[error("no data remaining after a start-up prefix of {startup} of {n} outcomes")]
    NoDataRemaining { startup: usize, n: usize },
    #[error("model complexity diverges: {0}")]
    ComplexityDiverges(String),
    #[error("plug-in estimator is undefined on an empty history; use a smoothed estimator")]
    UndefinedStart,
    #[error("unsupported cardinality: {0} joint configurations")]
    UnsupportedCardinality(u128),
    #[error("composite null hypotheses need a reverse-information-projection null, which is not provided")]
    UnsupportedComposite,
    #[error("unsupported: {0}")]
    Unsupported(String),
}

impl MdlError {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        MdlError::InvalidInput(msg.into())
    }
}
