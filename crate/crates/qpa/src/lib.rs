//! Quantitative analysis of loop-free bitvector programs.
//!
//! Given a program over fixed-width bitvector inputs whose basic blocks carry
//! integer weights, this crate computes the exact distribution of total path
//! weight over uniformly random inputs, the support of that distribution, and
//! the derived side-channel metrics (channel capacity, Shannon entropy).
//!
//! The pipeline avoids enumerating execution paths one model-counter query at
//! a time: for programs whose conditionals are unnested and have pairwise
//! disjoint semantic supports, one counter query per branch point suffices,
//! and the support of the distribution is obtained from the multiset of
//! basis-path weight differences without touching the counter at all.
//!
//! Modules:
//! - [`expr`]: bitvector expressions, input-closed boolean functions,
//!   CNF bit-blasting
//! - [`program`]: the `.qp` frontend, loop unrolling, weighted CFG and its
//!   path algebra
//! - [`solver`]: SAT decisions and exact model counting over CNF
//! - [`sums`]: submultiset sums of weight differences
//! - [`analysis`]: the support/distribution/value pipeline and QIF metrics
//! - [`oracle`]: brute-force baselines used as ground truth

pub mod analysis;
pub mod expr;
pub mod oracle;
pub mod program;
pub mod solver;
pub mod sums;

use std::sync::Arc;

use program::BranchId;

/// Crate-wide error type.
///
/// Structural pipeline outcomes (nested conditionals, dependent supports) are
/// *not* errors; they are reported through [`analysis::Outcome`]. `Error`
/// covers precondition violations, malformed input, and exhausted budgets.
#[derive(Debug, Clone, thiserror::Error)]
pub enum Error {
    #[error("parse error at {line}:{col}: {message}")]
    Parse { line: u32, col: u32, message: String },

    #[error("unbound variable `{0}`")]
    UnboundVariable(Arc<str>),

    #[error("cyclic binding through `{0}`")]
    CyclicBinding(Arc<str>),

    #[error("width error: {0}")]
    Width(String),

    #[error("constant {value} does not fit in {width} bits")]
    ConstantRange { value: u64, width: u32 },

    #[error("program still contains `repeat` loops")]
    NotLoopFree,

    #[error("nested conditionals: branch {inner} lies on an arm of branch {outer}")]
    NestedConditionals { outer: BranchId, inner: BranchId },

    #[error("condition of branch {branch} reads `{variable}`, which is written under an earlier branch")]
    MergeDependentCondition { branch: BranchId, variable: Arc<str> },

    #[error("invalid path: {0}")]
    InvalidPath(String),

    #[error("bit {bit} is semantically relevant but outside the counting set")]
    SupportViolation { bit: String },

    #[error("budget exceeded: {0}")]
    Budget(String),

    #[error("total weight overflows the weight type")]
    WeightOverflow,

    #[error("empty value set")]
    EmptyValueSet,

    #[error("io error: {0}")]
    Io(String),

    #[error("internal invariant violated: {0}")]
    Internal(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// Block weights and their sums. Model counts use arbitrary precision, but
/// weights are plain integers with checked arithmetic; a program whose path
/// weights exceed this range reports [`Error::WeightOverflow`] rather than
/// wrapping.
pub type Weight = i64;
