use alloc::boxed::Box;
use core::fmt;

pub type Result<T, E = Error> = core::result::Result<T, E>;

/// Errors raised by the numerical core.
#[derive(Debug, Clone, PartialEq)]
pub enum Error {
    /// An argument lies outside its admissible domain.
    Domain {
        what: &'static str,
        value: f64,
        expected: &'static str,
    },
    /// A structural input (grid, mixture, list) is unusable.
    Invalid(&'static str),
    /// A derived probability came out negative beyond round-off. This is a
    /// bug in the model, not a user error.
    Inconsistent { what: &'static str, value: f64 },
    /// No analyzer setting violates the inequality at any efficiency in (0, 1].
    NoViolation { f: f64 },
    /// Failure while computing one point of a curve over `f`.
    AtRatio { f: f64, source: Box<Error> },
}

impl Error {
    pub(crate) fn domain(what: &'static str, value: f64, expected: &'static str) -> Self {
        Error::Domain {
            what,
            value,
            expected,
        }
    }
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::Domain {
                what,
                value,
                expected,
            } => write!(f, "{what} = {value} is out of range (expected {expected})"),
            Error::Invalid(msg) => f.write_str(msg),
            Error::Inconsistent { what, value } => {
                write!(f, "internal inconsistency: {what} = {value:e} < 0")
            }
            Error::NoViolation { f: ratio } => write!(
                f,
                "no analyzer setting violates the inequality for f = {ratio} at any efficiency in (0, 1]"
            ),
            Error::AtRatio { f: ratio, source } => write!(f, "at f = {ratio}: {source}"),
        }
    }
}

impl core::error::Error for Error {
    fn source(&self) -> Option<&(dyn core::error::Error + 'static)> {
        match self {
            Error::AtRatio { source, .. } => Some(source.as_ref()),
            _ => None,
        }
    }
}
