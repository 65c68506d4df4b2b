use thiserror::Error;

/// Errors raised by the numerical routines.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// A scalar parameter is outside its admissible range.
    #[error("parameter error: {0}")]
    Parameter(String),
    /// A requested interval or window is not covered by the data.
    #[error("domain error: {0}")]
    Domain(String),
    /// A numerical method failed (non-PSD embedding, overflow, ...).
    #[error("numeric error: {0}")]
    Numeric(String),
    /// The state left the finite range during integration.
    #[error("trajectory blew up at t = {time}")]
    BlowUp { time: f64 },
    /// A structural assumption of the operation does not hold.
    #[error("precondition failed: {0}")]
    Precondition(String),
    #[error("io error: {0}")]
    Io(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

macro_rules! param_err {
    ($($arg:tt)*) => { $crate::error::Error::Parameter(format!($($arg)*)) };
}
macro_rules! domain_err {
    ($($arg:tt)*) => { $crate::error::Error::Domain(format!($($arg)*)) };
}
pub(crate) use domain_err;
pub(crate) use param_err;
