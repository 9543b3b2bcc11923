use thiserror::Error;

/// Errors raised by the simulation library.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("domain mismatch: {class} cannot evaluate {point}")]
    DomainMismatch { class: &'static str, point: String },

    #[error("hypothesis {hypothesis} does not belong to {class}")]
    HypothesisMismatch {
        class: &'static str,
        hypothesis: String,
    },

    #[error("empty sequence")]
    EmptySequence,

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("path of length {path} does not match tree depth {depth}")]
    PathLength { path: usize, depth: usize },

    #[error("kernel sampling failed at prefix {prefix}: {reason}")]
    Sampling { prefix: String, reason: String },

    #[error("at least 2 samples are needed for a standard error, got {0}")]
    TooFewSamples(usize),

    #[error("exact computation needs {work:.3e} work units, budget is {budget:.0e}; use the Monte Carlo estimator")]
    BudgetExceeded { work: f64, budget: f64 },

    #[error("centered estimate needs a conditional-mean oracle or inner Monte Carlo")]
    MissingMeanOracle,

    #[error("constraint projection unavailable: {0}")]
    Infeasible(String),

    #[error("constraint violated at round {round}")]
    ConstraintViolation { round: usize },

    #[error("grid of {requested:.3e} thresholds exceeds the cap of {cap:.0e}; largest feasible exponent is {max_exponent:.4}")]
    GridTooLarge {
        requested: f64,
        cap: f64,
        max_exponent: f64,
    },

    #[error("bound {bound} does not apply to this game: {reason}")]
    BoundMismatch { bound: String, reason: String },

    #[error("invalid experiment: {0}")]
    InvalidSpec(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
