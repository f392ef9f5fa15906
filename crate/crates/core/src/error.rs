use core::fmt;

pub type Result<T> = core::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq)]
pub enum Error {
    /// Two inputs disagree on the dimension `k`.
    DimensionMismatch {
        what: &'static str,
        expected: usize,
        found: usize,
    },
    /// A vector or matrix has no entries.
    Empty(&'static str),
    /// NaN (or an infinity where only finite values are allowed).
    NonFinite(&'static str),
    NotSymmetric { row: usize, col: usize },
    NotPositiveDefinite { pivot: usize },
    /// `lower[index] >= upper[index]`.
    InvalidBounds { index: usize },
    InvalidDf(f64),
    /// A scalar argument outside its domain, e.g. `p` not in (0, 1).
    Domain { what: &'static str, value: f64 },
    InvalidConfig(&'static str),
    UnknownMethod,
    UnknownTail,
    /// The truncation box carries no probability distinguishable from zero.
    DegenerateTruncation { value: f64, error: f64 },
    /// Rejection sampling ran out of proposals.
    AcceptanceTooLow {
        accepted: usize,
        attempts: u64,
        rate: f64,
    },
    /// The operation needs a parameter the distribution does not carry.
    MissingParameter(&'static str),
}

impl Error {
    /// True for errors caused by malformed or inconsistent inputs, false for
    /// numerical failures of otherwise valid requests.
    pub fn is_validation(&self) -> bool {
        !matches!(
            self,
            Error::DegenerateTruncation { .. } | Error::AcceptanceTooLow { .. }
        )
    }
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::DimensionMismatch {
                what,
                expected,
                found,
            } => write!(f, "{what}: expected dimension {expected}, found {found}"),
            Error::Empty(what) => write!(f, "{what} must have at least one entry"),
            Error::NonFinite(what) => write!(f, "{what} contains a non-finite value"),
            Error::NotSymmetric { row, col } => {
                write!(f, "sigma is not symmetric at ({row}, {col})")
            }
            Error::NotPositiveDefinite { pivot } => {
                write!(f, "sigma is not positive-definite (pivot {pivot})")
            }
            Error::InvalidBounds { index } => {
                write!(f, "lower limit must be below upper limit at index {index}")
            }
            Error::InvalidDf(nu) => write!(f, "degrees of freedom must be positive, got {nu}"),
            Error::Domain { what, value } => write!(f, "{what} out of domain: {value}"),
            Error::InvalidConfig(msg) => f.write_str(msg),
            Error::UnknownMethod => f.write_str("method must be one of cholesky, eigen, svd"),
            Error::UnknownTail => f.write_str("tail must be one of lower, upper, both"),
            Error::DegenerateTruncation { value, error } => write!(
                f,
                "truncation region has negligible probability ({value:e} +/- {error:e})"
            ),
            Error::AcceptanceTooLow {
                accepted,
                attempts,
                rate,
            } => write!(
                f,
                "rejection sampling accepted {accepted} draws in {attempts} proposals (acceptance rate {rate})"
            ),
            Error::MissingParameter(what) => write!(f, "missing parameter: {what}"),
        }
    }
}

#[cfg(any(feature = "std", test))]
impl std::error::Error for Error {}
