use alloc::string::String;

/// Coarse classification used by front ends to pick exit codes.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ErrorKind {
    /// The input data violates a documented invariant.
    Validation,
    /// The request is outside what the configured truncation can answer.
    Refusal,
    /// An internal consistency check failed; results must not be trusted.
    Invariant,
}

#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
pub enum Error {
    #[error("unknown generator `{0}`")]
    UnknownGenerator(String),
    #[error("unknown identifier `{0}`")]
    UnknownId(String),
    #[error("exponent rank mismatch: expected {expected}, found {found}")]
    RankMismatch { expected: usize, found: usize },
    #[error("operator term {term} increases action")]
    TruncationViolation { term: usize },
    #[error("target lies outside the truncation: {0}")]
    TargetOutsideTruncation(String),
    #[error("target exponent lies outside the exponent box ±{0}")]
    ExponentBoxOverflow(i64),
    #[error("bracket series does not terminate: step {step} has ħ-order {order}")]
    SeriesDiverges { step: usize, order: u32 },
    #[error("invalid surface data at {locus}: {reason}")]
    InvalidSurface { locus: String, reason: String },
    #[error("Morse boundary does not square to zero at ({minimum}, {maximum})")]
    MorseSquare { minimum: String, maximum: String },
    #[error("inconsistent class data between {from} and {to}")]
    InconsistentClassData { from: String, to: String },
    #[error("invalid Morse index {0}")]
    InvalidMorseIndex(u8),
    #[error("invalid planar torsion descriptor: {0}")]
    InvalidDescriptor(String),
    #[error("invalid ECH data at {locus}: {reason}")]
    InvalidEch { locus: String, reason: String },
    #[error("contribution {index} has odd J+ = {value}")]
    OddJPlus { index: usize, value: i64 },
    #[error("multicomplex relation fails in degree {degree}: entry ({row}, {col}) is {value}")]
    MulticomplexRelation { degree: usize, row: String, col: String, value: String },
    #[error("scale factor must be positive")]
    NonPositiveScale,
    #[error("precondition failed: {0}")]
    Precondition(String),
    #[error("invariant breach: {0}")]
    InvariantBreach(String),
}

impl Error {
    pub fn kind(&self) -> ErrorKind {
        match self {
            Error::TargetOutsideTruncation(_)
            | Error::ExponentBoxOverflow(_)
            | Error::SeriesDiverges { .. } => ErrorKind::Refusal,
            Error::InvariantBreach(_) => ErrorKind::Invariant,
            _ => ErrorKind::Validation,
        }
    }

    pub(crate) fn surface(locus: impl Into<String>, reason: impl Into<String>) -> Self {
        Error::InvalidSurface { locus: locus.into(), reason: reason.into() }
    }

    pub(crate) fn ech(locus: impl Into<String>, reason: impl Into<String>) -> Self {
        Error::InvalidEch { locus: locus.into(), reason: reason.into() }
    }
}

pub type Result<T> = core::result::Result<T, Error>;
