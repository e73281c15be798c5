use thiserror::Error;

/// Every failure the library can report.
///
/// Domain failures (a set is not separable, a model does not separate the
/// data) are ordinary variants so callers can branch on them; the CLI maps
/// them to exit code 1.
#[derive(Debug, Clone, Error, PartialEq)]
pub enum ScrnError {
    #[error("dimension mismatch: expected {expected}, got {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("empty point set: {what}")]
    EmptySet { what: String },

    #[error("sign constraint violated: {layer}[{row},{col}] = {value}")]
    SignConstraintViolated {
        layer: String,
        row: usize,
        col: usize,
        value: f64,
    },

    #[error("negative point {index} lies within {distance:e} of the positive hull")]
    NotConvexlySeparable { index: usize, distance: f64 },

    #[error("classes {first} and {second} are not mutually convexly separable")]
    NotPairwiseMutuallyConvexSeparable { first: usize, second: usize },

    #[error("point {index} of the first set coincides with point {other} of the second set")]
    NotDisjoint { index: usize, other: usize },

    #[error("degenerate gamma_min = {gamma:e}")]
    DegenerateGamma { gamma: f64 },

    #[error("constructed model failed verification at point {index} ({set}): output {value}")]
    VerificationFailed { set: String, index: usize, value: f64 },

    #[error("model does not separate the data: point {index} of {set} has output {value}")]
    ModelDoesNotSeparate { set: String, index: usize, value: f64 },

    #[error("MM descent violated at iteration {iteration}: {previous} -> {current}")]
    DescentViolation {
        iteration: usize,
        previous: f64,
        current: f64,
    },

    #[error("non-finite value encountered in {context}")]
    NonFinite { context: String },

    #[error("configuration error: {0}")]
    Config(String),

    #[error("dataset generation failed after {attempts} attempts")]
    GenerationFailed { attempts: usize },

    #[error("parse error{}: {message}", line.map(|l| format!(" at line {l}")).unwrap_or_default())]
    Parse { line: Option<usize>, message: String },

    #[error("io error: {0}")]
    Io(String),
}

impl ScrnError {
    pub fn parse(message: impl Into<String>) -> Self {
        ScrnError::Parse {
            line: None,
            message: message.into(),
        }
    }

    pub fn parse_at(line: usize, message: impl Into<String>) -> Self {
        ScrnError::Parse {
            line: Some(line),
            message: message.into(),
        }
    }

    /// Short machine-readable name of the variant.
    pub fn kind(&self) -> &'static str {
        match self {
            ScrnError::DimensionMismatch { .. } => "DimensionMismatch",
            ScrnError::EmptySet { .. } => "EmptySet",
            ScrnError::SignConstraintViolated { .. } => "SignConstraintViolated",
            ScrnError::NotConvexlySeparable { .. } => "NotConvexlySeparable",
            ScrnError::NotPairwiseMutuallyConvexSeparable { .. } => "NotPairwiseMutuallyConvexSeparable",
            ScrnError::NotDisjoint { .. } => "NotDisjoint",
            ScrnError::DegenerateGamma { .. } => "DegenerateGamma",
            ScrnError::VerificationFailed { .. } => "VerificationFailed",
            ScrnError::ModelDoesNotSeparate { .. } => "ModelDoesNotSeparate",
            ScrnError::DescentViolation { .. } => "DescentViolation",
            ScrnError::NonFinite { .. } => "NonFinite",
            ScrnError::Config(_) => "ConfigError",
            ScrnError::GenerationFailed { .. } => "GenerationFailed",
            ScrnError::Parse { .. } => "ParseError",
            ScrnError::Io(_) => "IoError",
        }
    }
}

impl From<std::io::Error> for ScrnError {
    fn from(e: std::io::Error) -> Self {
        ScrnError::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, ScrnError>;
