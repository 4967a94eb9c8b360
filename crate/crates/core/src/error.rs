use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid exponent: {0}")]
    InvalidExponent(String),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("grid mismatch: {0}")]
    GridMismatch(String),
    #[error("grid too coarse: {0}")]
    Resolution(String),
    #[error("tail cannot be certified: {0}")]
    TailUncertified(String),
    #[error("degenerate input: {0}")]
    Degenerate(String),
    #[error("coverage {coverage:.3} below the required {required:.3}")]
    Coverage { coverage: f64, required: f64 },
    #[error("configuration error: {0}")]
    Config(String),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
    #[error("internal error: {0}")]
    Internal(String),
}

impl Error {
    /// Errors that stem from the numerics refusing an input, as opposed to
    /// malformed configuration or internal failures.
    pub fn is_numerical_refusal(&self) -> bool {
        matches!(
            self,
            Error::InvalidExponent(_)
                | Error::Resolution(_)
                | Error::TailUncertified(_)
                | Error::Degenerate(_)
                | Error::Coverage { .. }
                | Error::GridMismatch(_)
        )
    }
}
