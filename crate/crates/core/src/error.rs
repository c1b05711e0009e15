use thiserror::Error;

/// Errors raised by group, channel and measure operations.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum PolarError {
    #[error("cyclic factor order {0} is invalid (must be >= 2)")]
    InvalidOrder(usize),
    #[error("group size {size} exceeds the cap {cap}")]
    GroupTooLarge { size: usize, cap: usize },
    #[error("not a subgroup: {0}")]
    NotASubgroup(String),
    #[error("support must be non-empty")]
    EmptySupport,
    #[error("element index {index} is out of range for a group of size {size}")]
    ElementOutOfRange { index: usize, size: usize },
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("invalid channel: {0}")]
    InvalidChannel(String),
    #[error("channel is not bound to a group")]
    Unbound,
    #[error("group mismatch: {0} vs {1}")]
    GroupMismatch(String, String),
    #[error("invalid distribution: {0}")]
    InvalidDistribution(String),
    #[error("measure is not balanced (max deviation from uniform {0:e})")]
    Unbalanced(f64),
    #[error("invalid measure: {0}")]
    InvalidMeasure(String),
    #[error("atom budget exceeded: {atoms} atoms > budget {budget}")]
    AtomBudget { atoms: usize, budget: usize },
    #[error("invalid polar path {0:?}: only '-' and '+' are allowed")]
    InvalidPath(String),
    #[error("path depth {depth} exceeds the maximum {max}")]
    PathTooDeep { depth: usize, max: usize },
    #[error("linear program failed: {0}")]
    Lp(String),
    #[error("capacity-gap routes disagree by {0:e}")]
    RouteDisagreement(f64),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

pub type Result<T> = std::result::Result<T, PolarError>;
