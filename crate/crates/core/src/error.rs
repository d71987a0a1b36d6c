use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum PolyError {
    #[error("shape mismatch in {op}: {left:?} vs {right:?}")]
    ShapeMismatch {
        op: &'static str,
        left: (usize, usize),
        right: (usize, usize),
    },
    #[error("invalid permutation: {0}")]
    InvalidPermutation(String),
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum OracleError {
    #[error("variable universe of size {0} is odd; balanced partitions need an even count")]
    OddUniverse(usize),
    #[error("variable universe of size {size} exceeds the partition cap {cap}")]
    CapExceeded { size: usize, cap: usize },
    #[error("polynomial uses variable x{0} outside the partition")]
    UnknownVariable(u32),
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ArchError {
    #[error("invalid shape: {0}")]
    InvalidShape(String),
    #[error("invalid transpose set: {0}")]
    InvalidTransposeSet(String),
    #[error("output degree bound {degree} exceeds the degree cap {cap}")]
    DegreeCapExceeded { degree: u64, cap: u64 },
    #[error("weight assignment does not match the spec: {0}")]
    WeightMismatch(String),
    #[error(transparent)]
    Poly(#[from] PolyError),
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum BoundError {
    #[error("unknown rule `{0}`")]
    UnknownRule(String),
    #[error("regime violation: {0}")]
    RegimeViolation(String),
    #[error("precondition violated: {0}")]
    PreconditionViolation(String),
    #[error("missing input for rule `{rule}`: {what}")]
    MissingInput { rule: String, what: &'static str },
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum PlanError {
    #[error("no depth p <= {p_max} satisfies p / log2 d(p, B) > {ratio} at budget {budget}")]
    NoFeasibleDepth { budget: u64, ratio: f64, p_max: u32 },
    #[error("dominance check needs at least {need} shared points, got {got}")]
    InsufficientRange { need: usize, got: usize },
    #[error("invalid planner input: {0}")]
    InvalidInput(String),
}

/// Umbrella error for callers that span several modules.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error(transparent)]
    Poly(#[from] PolyError),
    #[error(transparent)]
    Oracle(#[from] OracleError),
    #[error(transparent)]
    Arch(#[from] ArchError),
    #[error(transparent)]
    Bound(#[from] BoundError),
    #[error(transparent)]
    Plan(#[from] PlanError),
}
