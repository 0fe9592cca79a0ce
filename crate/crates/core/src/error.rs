use core::fmt;

/// Crate-wide error type.
#[derive(Debug, Clone, PartialEq)]
pub enum Error {
    /// A precondition on an argument was violated.
    InvalidArgument(&'static str),
    /// The integrand evaluated to NaN or +/-inf at an interior quadrature node.
    IntegrandNotFinite { at: f64 },
    /// Adaptive quadrature hit its subdivision budget before reaching tolerance.
    QuadratureDidNotConverge,
    /// The integrand is outside the class admitting step-function approximation.
    NotApproximable,
    /// A tilting function failed validation.
    InvalidTilt(&'static str),
    /// The denominator of a reweighted probability is statistically indistinguishable from 0.
    WeightDegenerate,
    /// Too many non-finite functional evaluations in a Monte Carlo batch.
    NonFiniteSamples { seen: u64, total: u64 },
    /// A step function's support extends past the sampled path.
    SupportExceedsPath { support_end: f64, span: f64 },
    /// An operation required `t` to be a node of the path's grid.
    NotAGridNode { t: f64 },
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::InvalidArgument(msg) => write!(f, "invalid argument: {msg}"),
            Error::IntegrandNotFinite { at } => {
                write!(f, "integrand not finite at {at}")
            }
            Error::QuadratureDidNotConverge => {
                write!(f, "adaptive quadrature did not converge")
            }
            Error::NotApproximable => {
                write!(f, "integrand is not approximable by step functions in the required norms")
            }
            Error::InvalidTilt(msg) => write!(f, "invalid tilting function: {msg}"),
            Error::WeightDegenerate => {
                write!(f, "weight functional is degenerate: denominator within 3 stderr of 0")
            }
            Error::NonFiniteSamples { seen, total } => {
                write!(f, "{seen} non-finite evaluations out of {total} draws (limit 0.1%)")
            }
            Error::SupportExceedsPath { support_end, span } => {
                write!(f, "integrand support ends at {support_end} but path spans [0, {span}]")
            }
            Error::NotAGridNode { t } => write!(f, "time {t} is not a grid node"),
        }
    }
}

impl core::error::Error for Error {}

pub type Result<T> = core::result::Result<T, Error>;
