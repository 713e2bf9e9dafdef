use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("pole of the gamma function at z = {0}")]
    Pole(f64),
    #[error("domain error: {0}")]
    Domain(String),
    #[error("configuration error: {0}")]
    Config(String),
    #[error("model range error: {0}")]
    ModelRange(String),
    #[error("insufficient data: {0}")]
    InsufficientData(String),
    #[error("chart fit failed: {0}")]
    ChartFit(String),
    #[error("chart gluing failed: {0}")]
    Gluing(String),
    #[error("polygon error: {0}")]
    Polygon(String),
    #[error("precondition violated: {0}")]
    Precondition(String),
    #[error("sample size: {0}")]
    SampleSize(String),
    #[error("parse error: {0}")]
    Parse(String),
    #[error("i/o error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Parse(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
