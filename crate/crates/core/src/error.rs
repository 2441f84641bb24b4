use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = AuditError> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum AuditError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("malformed CSV: {0}")]
    Csv(#[from] csv::Error),
    #[error("column `{0}` not found in CSV header")]
    MissingColumn(String),
    #[error("no usable rows left after dropping {dropped} invalid row(s)")]
    NoRecords { dropped: usize },

    #[error("attribute specification is empty")]
    EmptyAttributeSpec,
    #[error("attribute `{0}` is not part of the dataset schema")]
    UnknownAttribute(String),
    #[error("minimum group size must be at least 1")]
    InvalidMinGroupSize,
    #[error("every group has fewer than {min_group_size} members")]
    AllGroupsExcluded { min_group_size: usize },
    #[error("group key has {found} label(s) but the attribute spec has {expected}")]
    KeyArity { expected: usize, found: usize },
    #[error("score {0} is not finite")]
    NonFiniteScore(f64),

    #[error("empty score sample")]
    EmptyScores,
    #[error("proportion {0} is outside the admissible range")]
    InvalidProportion(f64),
    #[error("largest group mean is {0}; mean ratios need a positive scale")]
    NonPositiveMean(f64),
    #[error("no score reaches the threshold {0}")]
    NoScoreReachesThreshold(f64),

    #[error("grid length mismatch: expected {expected}, found {found}")]
    GridMismatch { expected: usize, found: usize },
    #[error("invalid prior: {0}")]
    InvalidPrior(String),
    #[error("fairness bound {0} is outside (0, 1]")]
    InvalidBound(f64),

    #[error("unknown synthetic example {0} (expected 1, 2 or 3)")]
    UnknownExample(u32),
    #[error("parameter {value} is invalid for example {example}: {reason}")]
    InvalidParameter {
        example: u32,
        value: f64,
        reason: &'static str,
    },
    #[error("invalid synthetic spec: {0}")]
    InvalidSpec(String),
    #[error("quantile bisection did not converge at p = {p}")]
    BisectionNonConvergence { p: f64 },

    #[error("unknown output format `{0}` (expected json, csv or table)")]
    UnknownFormat(String),
    #[error("JSON serialization failed: {0}")]
    Json(#[from] serde_json::Error),
}
