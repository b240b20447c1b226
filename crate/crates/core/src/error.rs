use alloc::string::String;
use core::fmt;

pub type Result<T> = core::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq)]
pub enum Error {
    /// Grid parameters violate their invariants.
    InvalidDomain(String),
    /// A scalar or structural argument is out of range.
    InvalidArgument(String),
    /// Periodic data does not have zero average over the torus.
    NonZeroMean { mean: f64 },
    /// Two inputs that must share a time stamp do not.
    TimeMismatch { expected: f64, found: f64 },
    /// Advective time step exceeds the stability limit.
    CflViolation { t: f64, cfl: f64, limit: f64 },
    /// Too much of a field's mass sits near the `x₁` truncation boundary.
    TailMass {
        t: f64,
        fraction: f64,
        threshold: f64,
    },
    /// A flux derivative is not monotone where it must be.
    NotMonotone(String),
    /// Exponent relation has no admissible solution.
    Infeasible(String),
    /// A fit window holds too few usable points.
    InsufficientData { needed: usize, found: usize },
    /// A log-fit was asked to use a non-positive value.
    NonPositive { t: f64, value: f64 },
    /// A zero-average precondition fails in the given direction (1-based).
    Precondition { direction: usize, value: f64 },
    /// A ratio with zero denominator.
    Undefined(&'static str),
    /// The solution left the range where the fluxes were validated.
    NonFinite { t: f64 },
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::InvalidDomain(msg) => write!(f, "invalid domain: {msg}"),
            Error::InvalidArgument(msg) => write!(f, "invalid argument: {msg}"),
            Error::NonZeroMean { mean } => write!(
                f,
                "periodic perturbation must have zero average over the torus (found mean {mean:e})"
            ),
            Error::TimeMismatch { expected, found } => {
                write!(f, "time stamp mismatch: expected t={expected}, found t={found}")
            }
            Error::CflViolation { t, cfl, limit } => write!(
                f,
                "advective CFL number {cfl:.4} exceeds limit {limit} at t={t}"
            ),
            Error::TailMass {
                t,
                fraction,
                threshold,
            } => write!(
                f,
                "tail mass fraction {fraction:e} exceeds {threshold:e} at t={t}: \
                 the solution reached the x1 truncation boundary"
            ),
            Error::NotMonotone(msg) => write!(f, "flux derivative not monotone: {msg}"),
            Error::Infeasible(msg) => write!(f, "infeasible exponents: {msg}"),
            Error::InsufficientData { needed, found } => {
                write!(f, "fit window needs at least {needed} points, found {found}")
            }
            Error::NonPositive { t, value } => {
                write!(f, "non-positive value {value:e} at t={t} cannot be log-fitted")
            }
            Error::Precondition { direction, value } => write!(
                f,
                "zero-average precondition fails in direction x{direction} (slice average {value:e})"
            ),
            Error::Undefined(what) => write!(f, "undefined ratio: {what}"),
            Error::NonFinite { t } => write!(f, "non-finite values at t={t}"),
        }
    }
}

impl core::error::Error for Error {}
