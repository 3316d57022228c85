use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

/// Every failure the toolkit can report. The variant name is what the CLI
/// prints on stderr, so keep them stable.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("NotSquare: matrix is {rows}x{cols}")]
    NotSquare { rows: usize, cols: usize },

    #[error("NotHermitian: ||A - A^dagger|| = {residual:e}")]
    NotHermitian { residual: f64 },

    #[error("NotPSD: eigenvalue {eigenvalue:e} below clamping threshold")]
    NotPsd { eigenvalue: f64 },

    #[error("NotContraction: operator norm {norm} exceeds 1")]
    NotContraction { norm: f64 },

    #[error("NotUnitary: ||U^dagger U - I|| = {residual:e}")]
    NotUnitary { residual: f64 },

    #[error("DimensionMismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },

    #[error("UnnormalizedInput: state norm {norm}")]
    UnnormalizedInput { norm: f64 },

    #[error("AllZeroWeights: at least one weight must be positive")]
    AllZeroWeights,

    #[error("TooManyWeights: {count} weights do not fit in {capacity} slits")]
    TooManyWeights { count: usize, capacity: usize },

    #[error("NegativeWeight: weight {index} is {value}")]
    NegativeWeight { index: usize, value: f64 },

    #[error("BadTruncation: M = {m} with m0 = {m0} (need 1 <= M <= m0 + 1)")]
    BadTruncation { m0: usize, m: usize },

    #[error("SlitOutOfRange: slit {slit} with {slits} slits")]
    SlitOutOfRange { slit: usize, slits: usize },

    #[error("ZeroProbabilityProjection: projection probability {probability:e}")]
    ZeroProbabilityProjection { probability: f64 },

    #[error("LengthMismatch: {what}")]
    LengthMismatch { what: String },

    #[error("ZeroProbability: step probability is zero, expected time is infinite")]
    ZeroProbability,

    #[error("BadProbability: {value} is outside the allowed range")]
    BadProbability { value: f64 },

    #[error("SpectrumOutOfRange: eigenvalue {eigenvalue} outside [0, 1]")]
    SpectrumOutOfRange { eigenvalue: f64 },

    #[error("BadLowerBound: E = {e_bound} exceeds lowest eigenvalue {lambda0}")]
    BadLowerBound { e_bound: f64, lambda0: f64 },

    #[error("BadParameters: {0}")]
    BadParameters(String),

    #[error("DegenerateGroundState: lowest eigenvalues {lambda0} and {lambda1} coincide")]
    DegenerateGroundState { lambda0: f64, lambda1: f64 },

    #[error("InvalidProgram: {0}")]
    InvalidProgram(String),

    #[error("ParseError: {0}")]
    Parse(String),

    #[error("IoError: {0}")]
    Io(String),
}

impl Error {
    /// Stable short name of the error kind.
    pub fn name(&self) -> &'static str {
        match self {
            Error::NotSquare { .. } => "NotSquare",
            Error::NotHermitian { .. } => "NotHermitian",
            Error::NotPsd { .. } => "NotPSD",
            Error::NotContraction { .. } => "NotContraction",
            Error::NotUnitary { .. } => "NotUnitary",
            Error::DimensionMismatch { .. } => "DimensionMismatch",
            Error::UnnormalizedInput { .. } => "UnnormalizedInput",
            Error::AllZeroWeights => "AllZeroWeights",
            Error::TooManyWeights { .. } => "TooManyWeights",
            Error::NegativeWeight { .. } => "NegativeWeight",
            Error::BadTruncation { .. } => "BadTruncation",
            Error::SlitOutOfRange { .. } => "SlitOutOfRange",
            Error::ZeroProbabilityProjection { .. } => "ZeroProbabilityProjection",
            Error::LengthMismatch { .. } => "LengthMismatch",
            Error::ZeroProbability => "ZeroProbability",
            Error::BadProbability { .. } => "BadProbability",
            Error::SpectrumOutOfRange { .. } => "SpectrumOutOfRange",
            Error::BadLowerBound { .. } => "BadLowerBound",
            Error::BadParameters(_) => "BadParameters",
            Error::DegenerateGroundState { .. } => "DegenerateGroundState",
            Error::InvalidProgram(_) => "InvalidProgram",
            Error::Parse(_) => "ParseError",
            Error::Io(_) => "IoError",
        }
    }
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

impl From<csv::Error> for Error {
    fn from(e: csv::Error) -> Self {
        Error::Io(e.to_string())
    }
}
