use alloc::string::String;

pub type Result<T, E = Error> = core::result::Result<T, E>;

/// Every failure the algorithmic core can report.
///
/// Variants are coarse on purpose: callers branch on the category (data
/// problem vs numeric failure) and print the message.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("value {value} outside valid range [{min}, {max}] for {what}")]
    Range {
        what: &'static str,
        value: f64,
        min: f64,
        max: f64,
    },
    #[error("segment is unvoiced")]
    Unvoiced,
    #[error("insufficient data: {0}")]
    InsufficientData(String),
    #[error("configuration error: {0}")]
    Config(String),
    #[error("degenerate geometry: {0}")]
    Geometry(String),
    #[error("missing vowel(s) {0}")]
    MissingVowel(String),
    #[error("degenerate formants: {0}")]
    Degenerate(String),
    #[error("no valid formant frames in segment")]
    FormantFailure,
    #[error("empty vowel categories: {0}")]
    EmptyCategory(String),
    #[error("severity band {0} has no subjects")]
    EmptyBand(String),
    #[error("invalid data: {0}")]
    Data(String),
    #[error("numeric failure: {0}")]
    Numeric(String),
    #[error("invalid input: {0}")]
    Input(String),
    #[error("shape mismatch for {name}: expected {expected:?}, found {found:?}")]
    Shape {
        name: String,
        expected: (usize, usize),
        found: (usize, usize),
    },
    #[error("metric undefined: {0}")]
    UndefinedMetric(String),
}

impl Error {
    /// True for failures of arithmetic (NaN, singular matrices) as opposed
    /// to bad inputs.
    pub fn is_numeric(&self) -> bool {
        matches!(self, Error::Numeric(_))
    }
}
