use std::path::PathBuf;

/// Errors produced by the reconstruction, search, stitching and metric code.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: String, found: String },

    #[error("wavelength samples must be strictly increasing (violated at index {index})")]
    NonMonotoneWavelength { index: usize },

    #[error("dispersion coefficients must be finite (a2={a2}, a3={a3})")]
    NonFiniteCoefficients { a2: f64, a3: f64 },

    #[error("empty input: {0}")]
    Empty(&'static str),

    #[error("scale mismatch: {0}")]
    Scale(String),

    #[error("image is identically zero")]
    ZeroImage,

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("value out of range: {0}")]
    OutOfRange(String),

    #[error("image {rows}x{cols} too small for {scales} scales (needs min side {min_side}); try {suggested} scales")]
    ImageTooSmall {
        rows: usize,
        cols: usize,
        scales: usize,
        min_side: usize,
        suggested: usize,
    },

    #[error("format error: {0}")]
    Format(String),

    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error("png encoding failed: {0}")]
    Png(String),
}

impl Error {
    pub(crate) fn dims(expected: impl Into<String>, found: impl Into<String>) -> Self {
        Error::DimensionMismatch {
            expected: expected.into(),
            found: found.into(),
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
