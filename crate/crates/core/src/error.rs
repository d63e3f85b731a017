use thiserror::Error;

/// Errors raised by the set-combinatorial layer and by system construction.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Error {
    #[error("process count {0} outside supported range 1..=64")]
    ProcessCount(usize),

    #[error("process index {index} out of range for n = {n}")]
    ProcessIndex { index: usize, n: usize },

    #[error("mismatched process counts: {left} vs {right}")]
    SizeMismatch { left: usize, right: usize },

    #[error("expected {expected} per-process systems, got {got}")]
    SystemCount { expected: usize, got: usize },

    #[error("fail-prone system violates the Q3 condition; no quorum system exists")]
    Q3Violated,

    #[error("asymmetric fail-prone system violates the B3 condition; no asymmetric quorum system exists")]
    B3Violated,

    #[error("threshold f = {f} exceeds n = {n}")]
    Threshold { n: usize, f: usize },

    #[error("kernel enumeration supports n <= {cap}, got n = {n}")]
    EnumerationCap { n: usize, cap: usize },

    #[error("quorum family must be non-empty and contain only non-empty sets")]
    DegenerateQuorums,
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
