use core::fmt;

pub type Result<T> = core::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq)]
pub enum Error {
    /// Two operands disagree on a dimension.
    DimensionMismatch {
        what: &'static str,
        expected: usize,
        found: usize,
    },
    /// An argument is outside its admissible range.
    OutOfRange { what: &'static str, value: f64 },
    /// A structural precondition is violated.
    Invalid(&'static str),
    /// No cluster bound is available for this kernel and dimension.
    NoBound { dimension: usize },
    /// Training produced a non-finite reward.
    Diverged { episode: usize },
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::DimensionMismatch { what, expected, found } => {
                write!(f, "{what}: expected dimension {expected}, found {found}")
            }
            Error::OutOfRange { what, value } => write!(f, "{what} out of range: {value}"),
            Error::Invalid(msg) => f.write_str(msg),
            Error::NoBound { dimension } => write!(
                f,
                "no cluster bound available for dimension {dimension} without a spherical-code table"
            ),
            Error::Diverged { episode } => {
                write!(f, "training diverged: non-finite reward in episode {episode}")
            }
        }
    }
}

impl core::error::Error for Error {}

pub(crate) fn check_dim(what: &'static str, expected: usize, found: usize) -> Result<()> {
    if expected == found {
        Ok(())
    } else {
        Err(Error::DimensionMismatch { what, expected, found })
    }
}
