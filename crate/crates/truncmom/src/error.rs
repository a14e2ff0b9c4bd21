use crate::multiindex::MultiIndex;

/// Errors produced by construction and solving.
#[derive(Debug, Clone, thiserror::Error)]
pub enum Error {
    #[error("axis {axis} out of range for dimension {dim}")]
    AxisOutOfRange { axis: usize, dim: usize },

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("empty index set")]
    EmptyIndexSet,

    #[error("index set is not admissible: {reason}")]
    NotAdmissible { reason: String },

    #[error("moment for index {index} required by K+K is missing")]
    MissingMoment { index: MultiIndex },

    #[error("moment for index {index} lies outside K+K")]
    ExtraneousMoment { index: MultiIndex },

    #[error("moment for index {index} is not finite")]
    NonFiniteMoment { index: MultiIndex },

    #[error("moment s_0 = {value} is negative; no nonnegative measure has negative mass")]
    NegativeMass { value: f64 },

    #[error("atom mass {mass} is not positive")]
    NonPositiveAtomMass { mass: f64 },

    #[error("Gram matrix is not positive semidefinite: {detail}")]
    NotPositiveSemidefinite { detail: String },

    #[error("operators do not commute: {detail}")]
    NotCommuting { detail: String },

    #[error("trace condition violated: |Tr(B2 B1* - B1 B2*)| = {value}")]
    TraceConditionViolated { value: f64 },

    #[error("solver called with index {got}, expected {expected}")]
    WrongIndex { expected: usize, got: usize },

    #[error(
        "operator blocks unavailable: the indexation does not list the Omega_0 monomials first"
    )]
    BlocksUnavailable,

    #[error("extension is not dimensionally stable (index {index})")]
    NotDimensionallyStable { index: usize },

    #[error("border condition (Ext K)\\K \u{2286} \u{2202}(Ext K) fails for this truncation")]
    BorderConditionFails,

    #[error("extracted measure does not reproduce the base moments (deviation {deviation})")]
    MomentMismatch { deviation: f64 },

    #[error("projection mass has invalid value {value} (expected a nonnegative real)")]
    InvalidMass { value: String },
}

pub type Result<T> = std::result::Result<T, Error>;
