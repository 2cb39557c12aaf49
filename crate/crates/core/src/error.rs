use thiserror::Error;

/// Errors raised by the engine. Each variant maps to a stable report code.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Error {
    #[error("pole at L = {0}: a denominator factor vanishes")]
    PoleAtQ(String),
    #[error("series has a nonzero polynomial term at T^{0}; it has no limit")]
    NonvanishingPolyPart(u32),
    #[error("unsupported shape: {0}")]
    UnsupportedShape(String),
    #[error("no combination of the basis matches the data: {0}")]
    Inconsistent(String),
    #[error("data does not determine the fit uniquely: {0}")]
    Underdetermined(String),
    #[error("polyhedron is unbounded: {0}")]
    Unbounded(String),
    #[error("grading takes infinitely many values on the lattice")]
    InfiniteGrading,
    #[error("dimension {0} exceeds the supported maximum {1}")]
    DimensionTooLarge(usize, usize),
    #[error("pieces {0} and {1} overlap")]
    OverlappingPieces(usize, usize),
    #[error("enumeration budget of {0} evaluations exceeded")]
    BudgetExceeded(u64),
    #[error("polynomial is not invariant under the weight (1,-1,0) action")]
    WeightCheckFailed,
    #[error("invalid input: {0}")]
    Invalid(String),
    #[error("parse error at {line}:{column}: {message}")]
    Parse {
        line: usize,
        column: usize,
        message: String,
    },
    #[error("task `{task}`, field `{field}`: {message}")]
    Validation {
        task: String,
        field: String,
        message: String,
    },
}

impl Error {
    /// Stable identifier used in reports.
    pub fn code(&self) -> &'static str {
        match self {
            Error::PoleAtQ(_) => "PoleAtQ",
            Error::NonvanishingPolyPart(_) => "NonvanishingPolyPart",
            Error::UnsupportedShape(_) => "UnsupportedShape",
            Error::Inconsistent(_) => "Inconsistent",
            Error::Underdetermined(_) => "Underdetermined",
            Error::Unbounded(_) => "Unbounded",
            Error::InfiniteGrading => "InfiniteGrading",
            Error::DimensionTooLarge(..) => "DimensionTooLarge",
            Error::OverlappingPieces(..) => "OverlappingPieces",
            Error::BudgetExceeded(_) => "BudgetExceeded",
            Error::WeightCheckFailed => "WeightCheckFailed",
            Error::Invalid(_) => "Invalid",
            Error::Parse { .. } => "ParseError",
            Error::Validation { .. } => "ValidationError",
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
