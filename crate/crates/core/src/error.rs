use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("{name} = {value} is outside the allowed range {range}")]
    Domain {
        name: &'static str,
        value: f64,
        range: &'static str,
    },

    #[error("invalid state: {0}")]
    Validation(String),

    #[error("reconstruction failed: {0}")]
    Reconstruction(String),

    #[error("count records do not match: {0}")]
    Mismatch(String),
}

pub type Result<T> = std::result::Result<T, Error>;

/// Checks `lo <= value <= hi`, rejecting NaN.
pub(crate) fn check_range(
    name: &'static str,
    value: f64,
    lo: f64,
    hi: f64,
    range: &'static str,
) -> Result<f64> {
    if value >= lo && value <= hi {
        Ok(value)
    } else {
        Err(Error::Domain { name, value, range })
    }
}
