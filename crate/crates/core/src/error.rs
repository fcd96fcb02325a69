use alloc::string::String;

use crate::panel::Day;

pub type Result<T, E = Error> = core::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("invalid range: max ({max}) must exceed min ({min})")]
    InvalidRange { min: f64, max: f64 },

    #[error("invalid knot vector: {0}")]
    InvalidKnots(&'static str),

    #[error("point {value} outside domain [{min}, {max}]")]
    OutOfDomain { value: f64, min: f64, max: f64 },

    #[error("{observed} observations, at least {required} required")]
    InsufficientObservations { observed: usize, required: usize },

    #[error("degenerate design: all observations are collocated")]
    DegenerateDesign,

    #[error("no day produced a usable fit")]
    EmptyOutput,

    #[error("K = {k} outside valid range 1..={max}")]
    KOutOfRange { k: usize, max: usize },

    #[error("rank-deficient design (rank {rank} of {k})")]
    RankDeficientDesign { rank: usize, k: usize },

    #[error("invalid parameters: {0}")]
    InvalidParams(&'static str),

    #[error("series of length {len} too short, need at least {min}")]
    SeriesTooShort { len: usize, min: usize },

    #[error("degenerate series: zero variance")]
    DegenerateSeries,

    #[error("stale state: state is dated {state:?}, prediction requested for {requested:?}")]
    StaleState { state: Day, requested: Day },

    #[error("alignment mismatch: {0}")]
    AlignmentMismatch(String),

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}
