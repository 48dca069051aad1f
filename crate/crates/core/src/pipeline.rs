//! Route selection: which construction produces a decomposition for a given
//! backend and requirement kind.

use crate::conservation;
use crate::decomp::{self, AffineDecomposition, Decomposition, LabelRoute};
use crate::error::{Error, Result};
use crate::mfmc::{self, MfmcDecomposition};
use crate::system::{AffineRequirement, Backend, Marginals, Requirement, SetSystem};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Method {
    /// Digraphs use the label-setting run, posets and explicit abstract
    /// networks the oracle label loop, other explicit systems the cover
    /// construction. Requirement tables go to the poset reduction or the LP.
    Auto,
    Digraph,
    Abstract,
    Mfmc,
    BruteForce,
    Conservation,
}

impl Method {
    pub fn parse(s: &str) -> Option<Self> {
        Some(match s {
            "auto" => Method::Auto,
            "digraph" => Method::Digraph,
            "abstract" => Method::Abstract,
            "mfmc" => Method::Mfmc,
            "brute-force" => Method::BruteForce,
            "conservation" => Method::Conservation,
            _ => return None,
        })
    }

    pub fn name(self) -> &'static str {
        match self {
            Method::Auto => "auto",
            Method::Digraph => "digraph",
            Method::Abstract => "abstract",
            Method::Mfmc => "mfmc",
            Method::BruteForce => "brute-force",
            Method::Conservation => "conservation",
        }
    }
}

#[derive(Debug, Clone)]
pub enum Detail {
    Labels(AffineDecomposition),
    Covers(Box<MfmcDecomposition>),
    Reduction(Box<conservation::PosetDecomposition>),
    Lp,
}

#[derive(Debug, Clone)]
pub struct Outcome {
    pub method: Method,
    pub decomposition: Decomposition,
    pub detail: Detail,
}

/// Picks the concrete method `Auto` stands for.
pub fn resolve(system: &SetSystem, req: &Requirement) -> Method {
    match (req, system.backend()) {
        (Requirement::Affine(_), Backend::Digraph(_)) => Method::Digraph,
        (Requirement::Affine(_), Backend::Poset(_)) => Method::Abstract,
        (Requirement::Affine(_), Backend::Explicit(_)) if system.is_abstract_network() => Method::Abstract,
        (Requirement::Affine(_), Backend::Explicit(_)) => Method::Mfmc,
        (Requirement::Table(_), Backend::Poset(_)) => Method::Conservation,
        (Requirement::Table(_), _) => Method::BruteForce,
    }
}

pub fn decompose_affine_auto(system: &SetSystem, rho: &Marginals, mu: &AffineRequirement) -> Result<Outcome> {
    decompose(system, rho, &Requirement::Affine(mu.clone()), Method::Auto)
}

pub fn decompose(system: &SetSystem, rho: &Marginals, req: &Requirement, method: Method) -> Result<Outcome> {
    let method = if method == Method::Auto { resolve(system, req) } else { method };
    let affine = |what: &str| match req {
        Requirement::Affine(mu) => Ok(mu),
        Requirement::Table(_) => Err(Error::Unsupported(format!("{what} needs an affine requirement (mu)"))),
    };
    let (decomposition, detail) = match method {
        Method::Digraph | Method::Abstract => {
            let route = if method == Method::Digraph { LabelRoute::Digraph } else { LabelRoute::Abstract };
            let out = decomp::decompose_affine(system, rho, affine(method.name())?, route)?;
            (out.decomposition.clone(), Detail::Labels(out))
        }
        Method::Mfmc => {
            let out = mfmc::mfmc_decomposition(system, rho, affine("mfmc")?)?;
            (out.decomposition.clone(), Detail::Covers(Box::new(out)))
        }
        Method::BruteForce => {
            let verdict = crate::system::check_condition_star(system, rho, req)?;
            if let Some(witness) = verdict.witness {
                let covered = witness.cost(rho.as_slice());
                let required = req.value(&witness)?;
                return Err(Error::InfeasibleMarginals {
                    witness,
                    covered: Box::new(covered),
                    required: Box::new(required),
                });
            }
            let x = decomp::brute_force_feasibility(system, req, rho)?.ok_or(Error::NoFeasibleDecomposition)?;
            (x, Detail::Lp)
        }
        Method::Conservation => {
            let table = match req {
                Requirement::Table(t) => t,
                Requirement::Affine(_) => {
                    return Err(Error::Unsupported("conservation route needs a requirement table".into()))
                }
            };
            let out = conservation::decompose_poset_marginals(system, table, rho)?;
            (out.decomposition.clone(), Detail::Reduction(Box::new(out)))
        }
        Method::Auto => unreachable!("resolved above"),
    };
    Ok(Outcome { method, decomposition, detail })
}
