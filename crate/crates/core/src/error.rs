use thiserror::Error;

/// Every failure the library can report.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// A documented precondition of the called operation does not hold.
    #[error("precondition violated: {0}")]
    Precondition(String),

    /// `x` has no inverse modulo `modulus`.
    #[error("{x} is not invertible modulo {modulus}")]
    NotInvertible { x: i64, modulus: u64 },

    /// The character parity disagrees with the weight.
    #[error("character parity {parity} is incompatible with weight {weight} (need chi(-1) = (-1)^k)")]
    Parity { weight: u32, parity: i32 },

    /// A fixture failed schema or invariant checks.
    #[error("fixture {origin}: {reason}")]
    Fixture { origin: String, reason: String },

    /// Not enough Fourier coefficients to evaluate a finite sum.
    #[error("need coefficients up to n = {required}, fixture {label} has {available}")]
    InsufficientCoefficients { label: String, required: u64, available: u64 },

    /// A truncated sum could not reach its error target within the caps.
    #[error("truncation target not met: {0}")]
    Truncation(String),

    /// A linear system was singular or too badly conditioned.
    #[error("ill-conditioned system: {0}")]
    IllConditioned(String),

    /// A quantity came out infinite or NaN (poles, overflow).
    #[error("non-finite result: {0}")]
    NonFinite(String),

    /// The requested case lies outside what the library covers.
    #[error("unsupported case: {0}")]
    Unsupported(String),

    /// A claimed identity failed numerically.
    #[error("identity violated: {0}")]
    IdentityViolated(String),

    #[error("i/o error on {path}: {message}")]
    Io { path: String, message: String },
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn precondition<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Precondition(msg.into()))
}
