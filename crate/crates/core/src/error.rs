use alloc::boxed::Box;
use alloc::string::String;

pub type Result<T, E = Error> = core::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    Dimension { expected: usize, found: usize },

    #[error("non-finite value in {0}")]
    NonFinite(&'static str),

    #[error("matrix is not positive definite (pivot {pivot})")]
    Factorization { pivot: usize },

    #[error("ground truth x* is required by the oracle algorithm")]
    OracleRequired,

    #[error("noise budget eta is required")]
    MissingEta,

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("invalid ensemble: {0}")]
    Spec(String),

    #[error("baseline error is zero; improvement undefined")]
    DegenerateBaseline,

    #[error("no multiplier bracket found after {doublings} doublings")]
    NoBracket { doublings: usize },

    #[error("inner solve failed at outer iteration {iteration}: {source}")]
    Inner { iteration: usize, source: Box<Error> },
}

impl Error {
    pub(crate) fn at_iteration(self, iteration: usize) -> Self {
        Error::Inner { iteration, source: Box::new(self) }
    }
}

pub(crate) fn check_len(expected: usize, found: usize) -> Result<()> {
    if expected == found {
        Ok(())
    } else {
        Err(Error::Dimension { expected, found })
    }
}
