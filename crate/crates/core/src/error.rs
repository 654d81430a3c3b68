use alloc::string::String;

pub type Result<T, E = Error> = core::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("dimension error: {0}")]
    Dimension(String),
    #[error("invalid parameter: {0}")]
    Parameter(String),
    #[error("noise overflow: noise {noise} reached budget {budget}")]
    NoiseOverflow { noise: f64, budget: f64 },
    #[error("ciphertexts were produced under different parameters")]
    ParamsMismatch,
}

macro_rules! dim_err {
    ($($arg:tt)*) => { $crate::Error::Dimension(alloc::format!($($arg)*)) };
}
macro_rules! param_err {
    ($($arg:tt)*) => { $crate::Error::Parameter(alloc::format!($($arg)*)) };
}
pub(crate) use dim_err;
pub(crate) use param_err;
