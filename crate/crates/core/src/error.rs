use thiserror::Error;

use crate::rational::Rational;
use crate::system::OrderedPath;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, Error)]
pub enum Error {
    /// An input object violates its own invariants.
    #[error("structural error: {0}")]
    Structural(String),

    /// The caller broke an operation's precondition.
    #[error("precondition violated: {0}")]
    Precondition(String),

    /// Some member is covered by less marginal mass than it requires.
    #[error("marginals violate the covering condition on path {witness:?} (covered {covered}, required {required})")]
    InfeasibleMarginals { witness: OrderedPath, covered: Box<Rational>, required: Box<Rational> },

    /// The covering condition holds but no distribution meets every requirement.
    #[error("no feasible decomposition exists for these marginals")]
    NoFeasibleDecomposition,

    /// `rho + mu` is not a convex combination of covers plus a nonnegative ray.
    #[error("system is not weak max-flow/min-cut for this vector (no cover decomposition of y)")]
    NotWeakMfmc,

    /// A requirement table does not follow the splice conservation law.
    #[error("requirements violate the conservation law: {reason} (witness {witness:?})")]
    ConservationViolation { witness: Vec<OrderedPath>, reason: String },

    #[error("unsupported combination: {0}")]
    Unsupported(String),

    #[error("size guard exceeded: {what} is {actual}, limit {limit}")]
    SizeGuard { what: &'static str, actual: usize, limit: usize },

    #[error("parse error: {0}")]
    Parse(String),
}

impl Error {
    /// True for outcomes where the mathematics says no, as opposed to misuse.
    pub fn is_infeasibility(&self) -> bool {
        matches!(
            self,
            Error::InfeasibleMarginals { .. }
                | Error::NoFeasibleDecomposition
                | Error::NotWeakMfmc
                | Error::ConservationViolation { .. }
        )
    }
}

pub(crate) fn structural(msg: impl Into<String>) -> Error {
    Error::Structural(msg.into())
}

pub(crate) fn precondition(msg: impl Into<String>) -> Error {
    Error::Precondition(msg.into())
}
