use thiserror::Error;

/// Errors raised by the simulation and reduction routines.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("invalid argument: {0}")]
    Argument(String),

    #[error("matrix is not positive semidefinite: eigenvalue {eigenvalue:e}")]
    NotPsd { eigenvalue: f64 },

    #[error("format error: {0}")]
    Format(String),

    #[error("scale error: {0}")]
    Scale(String),

    #[error("degenerate instance: {reason}; trivial answer is {trivial_count}")]
    Degenerate { reason: String, trivial_count: u64 },

    #[error("promise violated: eigenvalue {eigenvalue:e} lies inside the forbidden window [{low:e}, {high:e}]")]
    PromiseViolation {
        eigenvalue: f64,
        low: f64,
        high: f64,
    },

    #[error("phase window error: {0}")]
    Range(String),

    #[error("threshold {threshold} coincides with grid point {grid_point}")]
    Tie { threshold: f64, grid_point: u64 },

    #[error("readout {value} is {distance} away from the nearest integer")]
    Confidence { value: f64, distance: f64 },

    #[error("state preparation does not produce the target on the flag-0 branch: {0}")]
    Prep(String),

    #[error("truncation bound not met: achieved {achieved:e} > target {target:e}")]
    Truncation { achieved: f64, target: f64 },

    #[error("amplitude {measured} differs from the required {expected}")]
    Amplitude { measured: f64, expected: f64 },

    #[error("io error: {0}")]
    Io(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}
