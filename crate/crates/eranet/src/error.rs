//! Crate-wide error type.

use thiserror::Error;

/// Errors produced by any stage of the analysis.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid era scheme: {0}")]
    InvalidEraScheme(String),

    #[error("year {year} lies beyond the final era boundary {bound}")]
    YearOutOfRange { year: i32, bound: i32 },

    #[error("unknown scholar id `{0}`")]
    UnknownScholar(String),

    #[error("scholar `{0}` has no era assignment")]
    MissingEra(String),

    #[error("invalid slice: {0}")]
    InvalidSlice(String),

    #[error("network still contains reverse era links; run chronology repair first")]
    UnrepairedNetwork,

    #[error("era repair did not converge within {0} moves")]
    NonConvergence(usize),

    #[error("parse error in {file}: {message}")]
    Parse { file: String, message: String },

    #[error("fetch failed after {attempts} attempt(s): {message}")]
    Fetch { attempts: u32, message: String },

    #[error("{0} is undefined on empty input")]
    EmptyInput(&'static str),

    #[error("network validation failed with {0} violation(s)")]
    Validation(usize),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("internal invariant breached: {0}")]
    Internal(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error("stage {stage} failed: {source}")]
    Stage {
        stage: &'static str,
        #[source]
        source: Box<Error>,
    },
}

impl Error {
    /// Process exit status for the batch CLI: 2 for configuration and schema
    /// problems, 3 for data validation failures, 4 for internal invariant
    /// breaches, 1 otherwise.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config(_) | Error::InvalidEraScheme(_) | Error::Parse { .. } => 2,
            Error::Validation(_)
            | Error::UnknownScholar(_)
            | Error::MissingEra(_)
            | Error::YearOutOfRange { .. }
            | Error::EmptyInput(_)
            | Error::InvalidSlice(_) => 3,
            Error::UnrepairedNetwork | Error::NonConvergence(_) | Error::Internal(_) => 4,
            Error::Fetch { .. } | Error::Io(_) => 1,
            Error::Stage { source, .. } => source.exit_code(),
        }
    }

    /// Attach the pipeline stage a failure happened in.
    pub fn in_stage(self, stage: &'static str) -> Error {
        Error::Stage { stage, source: Box::new(self) }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
