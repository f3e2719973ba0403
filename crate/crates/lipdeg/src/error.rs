use thiserror::Error;

/// Every fallible operation in the crate reports one of these.
#[derive(Debug, Error)]
pub enum Error {
    #[error("parse error at {location}: {message}")]
    Parse { location: String, message: String },
    #[error("dimension error: {0}")]
    Dimension(String),
    #[error("unsupported pairing: {0}")]
    UnsupportedPairing(String),
    #[error("shape error: {0}")]
    Shape(String),
    #[error("degenerate form: {0}")]
    Degenerate(String),
    #[error("invalid presentation: {0}")]
    Validation(String),
    #[error("undefined exponent: {0}")]
    Undefined(String),
    #[error("geometry error: {0}")]
    Geometry(String),
    #[error("resolution error: {0}")]
    Resolution(String),
    #[error("band {0} outside the partition range")]
    BandRange(i32),
    #[error("mean obstruction: zero mode has magnitude {0:e}")]
    MeanObstruction(f64),
    #[error("form is not closed: |da| = {0:e}")]
    NotClosed(f64),
    #[error("relation {relation} is not exact: mean {mean:e}")]
    NotExact { relation: String, mean: f64 },
    #[error("cutoff window error: {0}")]
    Window(String),
    #[error("parameter error: {0}")]
    Parameter(String),
    #[error("fit error: {0}")]
    Fit(String),
    #[error("ordering error: {0}")]
    Ordering(String),
    #[error("data error: {0}")]
    Data(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn parse(location: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Parse { location: location.into(), message: message.into() }
    }
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::parse(format!("line {} column {}", e.line(), e.column()), e.to_string())
    }
}
