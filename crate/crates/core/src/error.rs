use thiserror::Error;

/// Errors raised across the surface-dynamics toolkit.
#[derive(Error, Debug, Clone, PartialEq)]
pub enum Error {
    #[error("isometry is the identity within tolerance")]
    IdentityInput,
    #[error("isometry is not hyperbolic (|trace| = {trace})")]
    NotHyperbolic { trace: f64 },
    #[error("genus {0} is not supported (need genus >= 2)")]
    UnsupportedGenus(usize),
    #[error("generator index {index} out of range for {rank} generators")]
    BadIndex { index: usize, rank: usize },
    #[error("cannot parse word token {0:?}")]
    WordParse(String),
    #[error("reduction to the fundamental domain did not converge after {steps} steps")]
    NonConvergence { steps: usize },
    #[error("trivial word has no geodesic")]
    TrivialWord,
    #[error("word is not primitive (proper power of another element)")]
    NotPrimitive,
    #[error("tangency or degenerate crossing detected (angle {angle:.3e})")]
    TangencyDetected { angle: f64 },
    #[error("curve system has no intersections")]
    NoIntersections,
    #[error("curves {0} and {1} are freely homotopic (up to orientation)")]
    DuplicateCurve(usize, usize),
    #[error("strips of shear {shear} overlap: translate distance {distance:.4} <= {required:.4}")]
    StripsOverlap {
        shear: usize,
        distance: f64,
        required: f64,
    },
    #[error("map has no shears")]
    EmptySpec,
    #[error("invalid shear parameter: {0}")]
    InvalidShear(String),
    #[error("map is not area preserving (max |det - 1| = {max_defect:.3e})")]
    NotAreaPreserving { max_defect: f64 },
    #[error("direction is not a supporting direction of the estimated hull (gap {gap:.3e})")]
    NotSupporting { gap: f64 },
    #[error("no periodic point found up to N = {n_max} (best residual {best_residual:.3e})")]
    NotFound { n_max: usize, best_residual: f64 },
    #[error("target is not interior to the candidate hull")]
    NotInterior {
        separating: Vec<num_rational::BigRational>,
    },
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("invalid input: {0}")]
    Invalid(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    /// Variant name, stable for reports.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::IdentityInput => "IdentityInput",
            Error::NotHyperbolic { .. } => "NotHyperbolic",
            Error::UnsupportedGenus(_) => "UnsupportedGenus",
            Error::BadIndex { .. } => "BadIndex",
            Error::WordParse(_) => "WordParse",
            Error::NonConvergence { .. } => "NonConvergence",
            Error::TrivialWord => "TrivialWord",
            Error::NotPrimitive => "NotPrimitive",
            Error::TangencyDetected { .. } => "TangencyDetected",
            Error::NoIntersections => "NoIntersections",
            Error::DuplicateCurve(..) => "DuplicateCurve",
            Error::StripsOverlap { .. } => "StripsOverlap",
            Error::EmptySpec => "EmptySpec",
            Error::InvalidShear(_) => "InvalidShear",
            Error::NotAreaPreserving { .. } => "NotAreaPreserving",
            Error::NotSupporting { .. } => "NotSupporting",
            Error::NotFound { .. } => "NotFound",
            Error::NotInterior { .. } => "NotInterior",
            Error::DimensionMismatch { .. } => "DimensionMismatch",
            Error::Invalid(_) => "Invalid",
        }
    }
}
