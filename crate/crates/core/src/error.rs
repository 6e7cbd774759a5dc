use thiserror::Error;

/// Errors raised across the crate.
///
/// The variants line up with the process exit codes used by the `rwre`
/// binary: configuration problems map to 3, numerical non-convergence to 4.
#[derive(Debug, Error)]
pub enum Error {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("model error: {0}")]
    Model(String),
    #[error("data error: {0}")]
    Data(String),
    #[error("contract violated: {0}")]
    Contract(String),
    #[error("invalid parameter: {0}")]
    Parameter(String),
    #[error("numerical error: {message} (last residual {residual:e})")]
    Numerical { message: String, residual: f64 },
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Numerical { .. } => 4,
            Error::Contract(_) => 2,
            _ => 3,
        }
    }
}
