use thiserror::Error;

/// Failure modes shared by every module in the crate.
///
/// The split matters to callers: structural and contract errors mean the
/// input was wrong, numerical errors mean a well-formed input broke an
/// algorithm.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// Malformed data: wrong lengths, zero couplings, too few sites.
    #[error("structural error: {0}")]
    Structural(String),
    /// A precondition of an operation does not hold.
    #[error("contract violation: {0}")]
    Contract(String),
    /// An algorithm failed on valid input (non-convergence, breakdown).
    #[error("numerical failure: {0}")]
    Numerical(String),
}

impl Error {
    pub fn is_numerical(&self) -> bool {
        matches!(self, Error::Numerical(_))
    }
}

pub type Result<T> = std::result::Result<T, Error>;
