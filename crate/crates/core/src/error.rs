use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("pauli string length mismatch: {0} vs {1}")]
    LengthMismatch(usize, usize),

    #[error("operator dimension mismatch: {0} vs {1}")]
    DimensionMismatch(usize, usize),

    #[error("qubit count {0} outside supported range 1..=12")]
    DimensionOverflow(usize),

    #[error("parse error: {0}")]
    Parse(String),

    #[error("invalid code: {0}")]
    InvalidCode(String),

    #[error("syndrome outcome Tr[g Pi]/Tr[Pi] = {value} is not +/-1 (inconsistent code definition)")]
    OutcomeNotSign { value: f64 },

    #[error("closure exceeded operator budget: {count} operators generated, budget {budget}")]
    ClosureBudget { count: usize, budget: usize },

    #[error("coefficient basis is missing control channel (qubit {qubit}, axis {axis})")]
    MissingControlChannel { qubit: usize, axis: char },

    #[error("combiner rank check failed: {0}")]
    CombinerRank(String),

    #[error("operation only defined for {0}")]
    UnsupportedCode(String),

    #[error("trajectory aborted at step {step} (t = {time:.6}): {reason}")]
    TrajectoryAbort {
        step: usize,
        time: f64,
        reason: String,
    },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("internal invariant violated: {0}")]
    Internal(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}
