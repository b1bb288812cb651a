use sft_torsion_core::{Error, ErrorKind};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_VALIDATION: i32 = 2;
pub const EXIT_REFUSAL: i32 = 3;
pub const EXIT_INVARIANT: i32 = 4;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("cannot read {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("schema violation at {locus}: {reason}")]
    Schema { locus: String, reason: String },
    #[error(transparent)]
    Core(#[from] Error),
    #[error("certificate replay failed: {0}")]
    Replay(String),
}

impl CliError {
    pub fn schema(locus: impl Into<String>, reason: impl Into<String>) -> Self {
        CliError::Schema { locus: locus.into(), reason: reason.into() }
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) | CliError::Io { .. } => EXIT_USAGE,
            CliError::Schema { .. } => EXIT_VALIDATION,
            CliError::Core(e) => match e.kind() {
                ErrorKind::Validation => EXIT_VALIDATION,
                ErrorKind::Refusal => EXIT_REFUSAL,
                ErrorKind::Invariant => EXIT_INVARIANT,
            },
            CliError::Replay(_) => EXIT_INVARIANT,
        }
    }

    /// JSON-pointer locus when the error has one.
    pub fn locus(&self) -> Option<&str> {
        match self {
            CliError::Schema { locus, .. } => Some(locus),
            CliError::Core(Error::InvalidSurface { locus, .. } | Error::InvalidEch { locus, .. }) => Some(locus),
            _ => None,
        }
    }

    pub fn kind_name(&self) -> &'static str {
        match self.exit_code() {
            EXIT_USAGE => "usage",
            EXIT_VALIDATION => "validation",
            EXIT_REFUSAL => "refusal",
            _ => "invariant_breach",
        }
    }
}
