use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("matrix is not block-circulant under the basis: off-diagonal residual {residual:e} exceeds {limit:e}")]
    NotBlockCirculant { residual: f64, limit: f64 },

    #[error("equalizer spectrum is identically zero; detection SNR is undefined")]
    DegenerateSpectrum,

    #[error("LM user {user} has zero effective subchannel gain")]
    ZeroGain { user: usize },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("invalid config: `{key}` {reason}")]
    Validation { key: String, reason: String },

    #[error("malformed config: {0}")]
    Parse(#[from] serde_json::Error),

    #[error("empty sample set")]
    EmptySamples,

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn validation(key: &str, reason: impl Into<String>) -> Self {
        Error::Validation {
            key: key.to_owned(),
            reason: reason.into(),
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
