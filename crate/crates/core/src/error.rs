use alloc::string::String;
use core::fmt;

/// Errors surfaced by the numeric core.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Error {
    /// Shapes of the inputs do not line up (lengths, image extents, ...).
    Dimension(String),
    /// A parameter is outside its documented domain.
    Argument(String),
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::Dimension(msg) => write!(f, "dimension error: {msg}"),
            Error::Argument(msg) => write!(f, "argument error: {msg}"),
        }
    }
}

impl core::error::Error for Error {}

pub type Result<T> = core::result::Result<T, Error>;

macro_rules! dimension_err {
    ($($arg:tt)*) => {
        crate::Error::Dimension(alloc::format!($($arg)*))
    };
}

macro_rules! argument_err {
    ($($arg:tt)*) => {
        crate::Error::Argument(alloc::format!($($arg)*))
    };
}

pub(crate) use {argument_err, dimension_err};
