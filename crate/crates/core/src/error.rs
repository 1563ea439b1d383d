use thiserror::Error;

/// Every failure the numerical pipeline can report.
///
/// Variants are grouped by the stage that raises them; [`MaslovError::kind`]
/// gives a stable kebab-case name the CLI prints on failure.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum MaslovError {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("matrix is not positive definite (smallest eigenvalue {min_eigenvalue:e})")]
    NotPositiveDefinite { min_eigenvalue: f64 },

    #[error("degenerate frame: column {column} has pivot {pivot:e} below tolerance")]
    DegenerateFrame { column: usize, pivot: f64 },

    #[error("lambda = {lambda} lies in or below the essential spectrum ({side} asymptotic coefficient not positive definite)")]
    LambdaInEssentialSpectrum { lambda: f64, side: &'static str },

    #[error("X block is near singular (normalized det {det:e}); use the continuous surrogate")]
    NearSingular { det: f64 },

    #[error("vector {index} is not in ker X (|Xu|/|u| = {residual:e})")]
    InvalidKernel { index: usize, residual: f64 },

    #[error("crossing at x = {x0} is not regular (crossing form eigenvalue {eigenvalue:e})")]
    NonRegularCrossing { x0: f64, eigenvalue: f64 },

    #[error("integration blew up at x = {x}")]
    Blowup { x: f64 },

    #[error("ambiguous branch matching at x = {x} (best overlap {overlap:.4})")]
    AmbiguousMatching { x: f64, overlap: f64 },

    #[error("no crossing found in bracket [{a}, {b}]")]
    SpuriousDetection { a: f64, b: f64 },

    #[error("singularity at x = {x0} is not of order one: {detail}")]
    NonOrderOneSingularity { x0: f64, detail: String },

    #[error("crossing at x = {x0}: one-sided limit signature {limits} disagrees with crossing form signature {form}")]
    Inconsistency { x0: f64, limits: i32, form: i32 },

    #[error("crossing at x = {x0} is within {delta:e} of the domain boundary; enlarge the domain")]
    CrossingAtBoundary { x0: f64, delta: f64 },

    #[error("parse error at line {line}: {message}")]
    Parse { line: u64, message: String },

    #[error("io error: {0}")]
    Io(String),
}

impl MaslovError {
    pub fn kind(&self) -> &'static str {
        match self {
            MaslovError::InvalidInput(_) => "invalid-input",
            MaslovError::NotPositiveDefinite { .. } => "not-positive-definite",
            MaslovError::DegenerateFrame { .. } => "degenerate-frame",
            MaslovError::LambdaInEssentialSpectrum { .. } => "lambda-in-essential-spectrum",
            MaslovError::NearSingular { .. } => "near-singular",
            MaslovError::InvalidKernel { .. } => "invalid-kernel",
            MaslovError::NonRegularCrossing { .. } => "non-regular-crossing",
            MaslovError::Blowup { .. } => "blowup",
            MaslovError::AmbiguousMatching { .. } => "ambiguous-matching",
            MaslovError::SpuriousDetection { .. } => "spurious-detection",
            MaslovError::NonOrderOneSingularity { .. } => "non-order-one-singularity",
            MaslovError::Inconsistency { .. } => "inconsistency",
            MaslovError::CrossingAtBoundary { .. } => "crossing-at-boundary",
            MaslovError::Parse { .. } => "parse-error",
            MaslovError::Io(_) => "io-error",
        }
    }
}

impl From<std::io::Error> for MaslovError {
    fn from(e: std::io::Error) -> Self {
        MaslovError::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, MaslovError>;
