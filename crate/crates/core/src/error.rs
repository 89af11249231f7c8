use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid model parameters: {0}")]
    InvalidParams(String),

    #[error("invalid prior: {0}")]
    InvalidPrior(String),

    /// Risk solving needs positive mass on both sides of zero.
    #[error("degenerate prior: {0}")]
    DegeneratePrior(String),

    #[error("unstable grid: {0}")]
    UnstableGrid(String),

    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("invalid batch schedule: {0}")]
    InvalidSchedule(String),

    #[error("quadrature grid too narrow: {0}")]
    QuadratureTooNarrow(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("strategy mismatch: {0}")]
    StrategyMismatch(String),

    #[error("problem too large: {0}")]
    TooLarge(String),

    /// A computed object violates a structural property the solvers guarantee.
    #[error("numerical integrity violation: {0}")]
    Integrity(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// True for errors that signal a solver bug rather than bad input.
    pub fn is_integrity(&self) -> bool {
        matches!(self, Error::Integrity(_))
    }
}

pub type Result<T> = std::result::Result<T, Error>;
