//! Feasible decompositions of marginals over abstract networks.
//!
//! Given a set system `(E, 𝒫)` and marginals `ρ ∈ [0,1]^E`, the crate builds
//! distributions over subsets of `E` whose inclusion probabilities are exactly
//! `ρ` and which hit every path `P` with probability at least its requirement
//! `π_P`. Everything is computed in exact rational arithmetic.

#![allow(clippy::needless_range_loop)]

pub mod asp;
pub mod conservation;
pub mod decomp;
pub mod error;
pub mod game;
pub mod generate;
pub mod io;
pub mod lp;
pub mod mfmc;
pub mod nae3sat;
pub mod pipeline;
pub mod rational;
pub mod report;
pub mod system;

pub use error::{Error, Result};
pub use rational::Rational;
pub use system::{
    AffineRequirement, ElementId, ElementSet, Marginals, OrderedPath, Requirement, RequirementTable, SetSystem,
};
