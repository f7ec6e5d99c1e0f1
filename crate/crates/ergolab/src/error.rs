use thiserror::Error;

/// Errors shared across the crate.
#[derive(Debug, Clone, Error, PartialEq)]
pub enum Error {
    /// A map was applied to a phase point of an incompatible kind.
    #[error("phase point kind does not match map: {0}")]
    VariantMismatch(String),

    /// Parameter outside its admissible range.
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    /// A symbolic orbit ran out of symbols.
    #[error("symbol word exhausted: need at least {needed} symbols, have {have}")]
    WordExhausted { needed: usize, have: usize },

    /// Orbit left the invariant domain.
    #[error("orbit escaped the invariant domain at step {step}")]
    DomainEscape { step: usize },

    /// Derivative data requested at a critical point.
    #[error("derivative is singular at a critical point")]
    SingularDerivative,

    /// Map construction failed validation.
    #[error("map construction failed: {0}")]
    Construction(String),

    /// Pre-ball pullback crossed a critical fold.
    #[error("pre-ball is not homeomorphic to a ball: branch crosses the critical set at step {step}")]
    NotHomeomorphic { step: usize },

    /// Bump-pair region validation failure.
    #[error("bump-pair regions collide: {0}")]
    RegionsCollide(String),

    /// Bump-pair preimage touches the critical set.
    #[error("bump-pair preimage touches the critical set: {0}")]
    PreimageCritical(String),

    /// Operation is not defined for the given map or potential family.
    #[error("unsupported combination: {0}")]
    Unsupported(String),

    /// Transfer operator has an empty column.
    #[error("transfer operator column {0} is identically zero")]
    ZeroColumn(usize),

    /// Two metric arguments are incompatible.
    #[error("metric arguments incompatible: {0}")]
    MetricMismatch(String),
}

pub type Result<T> = std::result::Result<T, Error>;
