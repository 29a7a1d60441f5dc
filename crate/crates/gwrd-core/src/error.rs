use thiserror::Error;

use crate::pmf::NORMALIZATION_TOL;

#[derive(Debug, Error)]
pub enum Error {
    #[error("alphabet must have at least one symbol")]
    EmptyAlphabet,
    #[error("duplicate alphabet symbol {0:?}")]
    DuplicateSymbol(String),
    #[error("probability {0} is negative or non-finite")]
    NegativeProbability(f64),
    #[error("probabilities sum to {total}, outside 1 ± {NORMALIZATION_TOL}")]
    NotNormalized { total: f64 },
    #[error("variable role {0} is not part of this pmf")]
    UnknownRole(&'static str),
    #[error("target variable set must be non-empty")]
    EmptyTarget,
    #[error("variable sets must be disjoint")]
    OverlappingSets,
    #[error("argument {0} outside [0, 1]")]
    DomainError(f64),
    #[error("{0}")]
    ShapeMismatch(String),
    #[error("conditional rows must each sum to 1 ± {NORMALIZATION_TOL}: row {row} sums to {total}")]
    ChannelNotNormalized { row: usize, total: f64 },
    #[error("alphabet mismatch: {0}")]
    AlphabetMismatch(String),
    #[error("deterministic enumeration would visit {count} channels, over the cutoff {cutoff}")]
    EnumerationTooLarge { count: f64, cutoff: u64 },
    #[error("no searched channel meets the distortion budget {d_max}")]
    NoFeasibleChannel { d_max: f64 },
    #[error("weights must be nonnegative and not all zero")]
    BadWeights,
    #[error("scheme parameters infeasible: {0}")]
    InfeasibleParams(String),
    #[error("codebook storage would need {needed} symbols, over the budget {budget}")]
    MemoryBudget { needed: u64, budget: u64 },
    #[error("{0}")]
    Io(String),
}
