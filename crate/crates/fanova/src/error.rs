//! Crate-wide error type.

use thiserror::Error;

/// Errors raised while loading data, fitting curves or running tests.
#[derive(Debug, Error)]
pub enum Error {
    #[error("row {row}: {msg}")]
    InvalidRecord { row: usize, msg: String },

    #[error("duplicate observation for subject '{subject}' at t={time} (row {row})")]
    DuplicateObservation {
        subject: String,
        time: f64,
        row: usize,
    },

    #[error("subject '{subject}' appears in groups '{first}' and '{second}'")]
    SubjectInTwoGroups {
        subject: String,
        first: String,
        second: String,
    },

    #[error("need at least 2 groups, found {found}")]
    TooFewGroups { found: usize },

    #[error("invalid curve '{subject}': {msg}")]
    InvalidCurve { subject: String, msg: String },

    #[error("invalid basis: {0}")]
    InvalidBasis(String),

    #[error(
        "singular normal equations for the basis with {dimension} functions \
         (degree {degree}, {knots} knots) on {points} points"
    )]
    SingularFit {
        dimension: usize,
        degree: usize,
        knots: usize,
        points: usize,
    },

    #[error(
        "GCV is not finite anywhere on the lambda grid ({dimension} basis functions \
         for {points} points); use fewer basis functions"
    )]
    GcvDegenerate { dimension: usize, points: usize },

    #[error("invalid smoothing penalty: {0}")]
    InvalidPenalty(String),

    #[error("curve domains differ by more than {limit_pct}% of the span")]
    DomainMismatch { limit_pct: f64 },

    #[error("point t={0} lies outside the basis domain [{1}, {2}]")]
    OutsideDomain(f64, f64, f64),

    #[error("invalid partition: {0}")]
    InvalidPartition(String),

    #[error("interval [{a}, {b}] covers fewer than 2 grid points")]
    EmptyInterval { a: f64, b: f64 },

    #[error("within-group variability is zero on the interval; F is undefined")]
    DegenerateDenominator,

    #[error("invalid dataset: {0}")]
    InvalidDataset(String),

    #[error("permutation plan needs at least one row")]
    EmptyPlan,

    #[error("permutations need at least 2 distinct group labels")]
    SingleGroup,

    #[error("exhaustive enumeration would produce {count} labelings (cap {cap})")]
    TooManyLabelings { count: u128, cap: u128 },

    #[error(
        "{hypotheses} hypotheses give {nodes} intersection nodes, above the cap of {cap}; \
         use the combined shortcut instead"
    )]
    ClosureCapExceeded {
        hypotheses: usize,
        nodes: u64,
        cap: u64,
    },

    #[error("too many groups for a pairwise closure ({groups}); cap is {cap}")]
    PairwiseCapExceeded { groups: usize, cap: usize },

    #[error("interval index {index} is outside the partition (m={m})")]
    IntervalOutOfRange { index: usize, m: usize },

    #[error("p-value {0} is outside (0, 1]")]
    InvalidPValue(f64),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("io error for '{path}': {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub fn io(path: impl AsRef<std::path::Path>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.as_ref().display().to_string(),
            source,
        }
    }
}
