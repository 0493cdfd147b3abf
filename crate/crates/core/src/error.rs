use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// A truncated object does not carry enough coefficients for the request.
    #[error("truncation order too small: need {required}, have {available}")]
    Order { required: usize, available: usize },

    #[error("precondition violated: {0}")]
    Precondition(String),

    /// Input lies outside the region where the numerics are trustworthy.
    #[error("numeric domain error: {0}")]
    Domain(String),

    #[error("integration failed at t = {t}: {reason}")]
    Integration { t: f64, reason: String },

    /// Characteristics crossed before the requested time.
    #[error("shock: characteristics cross at s = {s} near x = {x}")]
    Shock { s: f64, x: f64 },

    #[error(
        "velocity collision |mu_{i} - mu_{k}| = {gap} below separation threshold at {location}"
    )]
    Degeneracy {
        i: usize,
        k: usize,
        gap: f64,
        location: String,
    },

    #[error("singular denominator ({gap}) at {location}")]
    Singularity { gap: f64, location: String },

    #[error("blow-up at s = {s}: max |field| = {max}")]
    BlowUp { s: f64, max: f64 },

    #[error("kinetic step rejected: {0}")]
    Step(String),

    #[error("outside the supported range: {0}")]
    OutOfScope(String),

    #[error("i/o: {0}")]
    Io(String),

    #[error("format: {0}")]
    Format(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Format(e.to_string())
    }
}
