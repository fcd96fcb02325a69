use std::path::PathBuf;

use serde::Serialize;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },

    #[error("{path}: {source}")]
    Csv { path: PathBuf, source: csv::Error },

    #[error("{path}: {source}")]
    Json { path: PathBuf, source: serde_json::Error },

    #[error("{path}: {source}")]
    Toml { path: PathBuf, source: toml::de::Error },

    #[error("invalid config: {0}")]
    Config(String),

    #[error("negative count for `{field}`: {value}")]
    NegativeCount { field: &'static str, value: i64 },

    #[error("unknown horizon {0}: must be in 0..=6")]
    UnknownHorizon(i64),

    #[error("no rows with horizon {horizon} in {path}")]
    EmptySelection { horizon: u8, path: PathBuf },

    #[error("missing column `{column}` in {path}")]
    MissingColumn { column: &'static str, path: PathBuf },

    #[error("{count} malformed row(s) in {path}; first at line {first_line}: {first_reason}")]
    MalformedRows { path: PathBuf, count: usize, first_line: u64, first_reason: String },

    #[error("artifact {path}: {reason}")]
    Artifact { path: PathBuf, reason: String },

    #[error(transparent)]
    Model(#[from] ftscast_core::Error),
}

impl Error {
    /// Stable machine-readable error kind.
    pub fn kind(&self) -> &'static str {
        use ftscast_core::Error as M;
        match self {
            Error::Io { .. } => "io",
            Error::Csv { .. } => "csv",
            Error::Json { .. } => "json",
            Error::Toml { .. } => "toml",
            Error::Config(_) => "invalid-config",
            Error::NegativeCount { .. } => "negative-count",
            Error::UnknownHorizon(_) => "unknown-horizon",
            Error::EmptySelection { .. } => "empty-selection",
            Error::MissingColumn { .. } => "missing-column",
            Error::MalformedRows { .. } => "malformed-row",
            Error::Artifact { .. } => "artifact",
            Error::Model(e) => match e {
                M::InvalidRange { .. } => "invalid-range",
                M::InvalidKnots(_) => "invalid-knots",
                M::OutOfDomain { .. } => "out-of-domain",
                M::InsufficientObservations { .. } => "insufficient-observations",
                M::DegenerateDesign => "degenerate-design",
                M::EmptyOutput => "empty-output",
                M::KOutOfRange { .. } => "k-out-of-range",
                M::RankDeficientDesign { .. } => "rank-deficient-design",
                M::InvalidParams(_) => "invalid-params",
                M::SeriesTooShort { .. } => "series-too-short",
                M::DegenerateSeries => "degenerate-series",
                M::StaleState { .. } => "stale-state",
                M::AlignmentMismatch(_) => "alignment-mismatch",
                M::DimensionMismatch { .. } => "dimension-mismatch",
                M::InvalidArgument(_) => "invalid-argument",
            },
        }
    }

    pub fn record(&self) -> ErrorRecord {
        ErrorRecord { error: self.kind(), message: self.to_string() }
    }

    pub(crate) fn io(path: impl Into<PathBuf>) -> impl FnOnce(std::io::Error) -> Error {
        let path = path.into();
        move |source| Error::Io { path, source }
    }

    pub(crate) fn csv(path: impl Into<PathBuf>) -> impl FnOnce(csv::Error) -> Error {
        let path = path.into();
        move |source| Error::Csv { path, source }
    }

    pub(crate) fn artifact(path: impl Into<PathBuf>, reason: impl Into<String>) -> Error {
        Error::Artifact { path: path.into(), reason: reason.into() }
    }
}

/// What the command line prints to stderr on failure.
#[derive(Debug, Clone, Serialize)]
pub struct ErrorRecord {
    pub error: &'static str,
    pub message: String,
}
