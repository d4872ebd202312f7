use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("unsupported layout: {0}")]
    Layout(String),

    #[error("invalid instance: {0}")]
    Instance(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("matrix is not Hermitian (deviation {0:e})")]
    NotHermitian(f64),

    #[error("enumeration too large: {bits} bits exceeds limit {max_bits}")]
    EnumerationTooLarge { bits: usize, max_bits: usize },

    #[error("solver failure: {0}")]
    Solver(String),

    #[error("could not satisfy request conditioning after {0} attempts")]
    Conditioning(usize),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("parse error: {0}")]
    Parse(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Parse(e.to_string())
    }
}

impl From<toml::de::Error> for Error {
    fn from(e: toml::de::Error) -> Self {
        Error::Config(e.to_string())
    }
}
