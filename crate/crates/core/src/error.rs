use thiserror::Error;

/// Errors raised by the library.
///
/// Everything except [`Error::Internal`] is a precondition failure on the
/// caller's input; `Internal` means an invariant the code relies on did not
/// hold and points at a bug.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("modulus {modulus:?} is reducible over F_{p}")]
    ReducibleModulus { p: u32, modulus: Vec<u32> },
    #[error("field mismatch: {0}")]
    FieldMismatch(String),
    #[error("needs a larger field: {0}")]
    NeedsLargerField(String),
    #[error("precondition failed: {0}")]
    Precondition(String),
    #[error("not invertible: {0}")]
    NotInvertible(String),
    #[error("parse error: {0}")]
    Parse(String),
    #[error("i/o error: {0}")]
    Io(String),
    #[error("internal assertion failed: {0}")]
    Internal(String),
}

impl Error {
    /// Process exit code used by the command line tool.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Internal(_) => 2,
            _ => 1,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;

macro_rules! ensure {
    ($cond:expr, $variant:ident, $($fmt:tt)+) => {
        if !$cond {
            return Err($crate::error::Error::$variant(format!($($fmt)+)));
        }
    };
}
pub(crate) use ensure;
