use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// An argument fell outside the domain of the operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// Adaptive quadrature hit its subdivision cap before meeting the tolerance.
    /// `estimate` is the best value obtained.
    #[error(
        "quadrature did not converge: estimate {estimate} (error estimate {error_estimate:e})"
    )]
    Accuracy { estimate: f64, error_estimate: f64 },

    /// Exhaustive path enumeration was requested on a tree that is too deep.
    #[error("enumeration refused: {steps} steps exceeds the cap of {max}")]
    TooManySteps { steps: usize, max: usize },
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn domain<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Domain(msg.into()))
}
