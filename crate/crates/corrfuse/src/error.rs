//! Error type shared across the crate.

use thiserror::Error;

#[derive(Error, Debug)]
pub enum Error {
    #[error("unknown source id `{0}`")]
    UnknownSource(String),
    #[error("unknown triple id `{0}`")]
    UnknownTriple(String),
    #[error("subset bitmasks support at most 64 sources, got {0}")]
    TooManySources(usize),
    #[error("prior must lie strictly between 0 and 1, got {0}")]
    PriorOutOfRange(f64),
    #[error("prior {alpha} exceeds the validity bound {bound} for precision {precision} and recall {recall} (derived false positive rate would exceed 1)")]
    InvalidPrior {
        alpha: f64,
        precision: f64,
        recall: f64,
        bound: f64,
    },
    #[error("precision is zero; false positive rate cannot be derived")]
    DegeneratePrecision,
    #[error("{0}")]
    InsufficientSupport(String),
    #[error("zero singleton recall or false positive rate in a correlation-factor denominator (source {0})")]
    DegenerateQuality(usize),
    #[error("no quality statistics for source index {0}")]
    MissingQuality(usize),
    #[error("no stored joint statistics for subset {0} and fallback is disabled")]
    MissingJoint(String),
    #[error("exact engine refused: {non_providers} non-providers exceeds the subset cap {cap}")]
    ExactTooLarge { non_providers: usize, cap: usize },
    #[error("inclusion-exclusion produced {value} for {side}; joint statistics are inconsistent")]
    InconsistentJointStats { side: &'static str, value: f64 },
    #[error("weighted rate {value} for source index {index} exceeds 1; complement factor would be negative")]
    WeightOutOfRange { index: usize, value: f64 },
    #[error("triple `{0}` has no ground-truth label")]
    MissingLabel(String),
    #[error("union-k threshold {k} out of range [1, {n_sources}]")]
    InvalidK { k: usize, n_sources: usize },
    #[error("exhaustive pattern distribution supports at most {max} sources, got {got}")]
    TooLargeForOracle { got: usize, max: usize },
    #[error("invalid parameter: {0}")]
    InvalidParams(String),
    #[error("{path}:{line}: {message}")]
    Parse {
        path: String,
        line: u64,
        message: String,
    },
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
