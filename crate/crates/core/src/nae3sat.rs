//! Not-all-equal 3-SAT and its reduction to marginal feasibility.
//!
//! Literal `y_i` is element `2i`, `¬y_i` is `2i + 1`. Members are every
//! clause, every complemented clause, and every pair `{y_i, ¬y_i}`; all
//! marginals are 1/2 and all requirements 1.

use num_traits::One;
use rand::Rng;

use crate::error::{precondition, Result};
use crate::rational::{self, Rational};
use crate::system::{Marginals, RequirementTable, SetSystem};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Literal {
    pub var: usize,
    pub negated: bool,
}

impl Literal {
    pub fn element(self) -> usize {
        2 * self.var + self.negated as usize
    }

    pub fn complement(self) -> Literal {
        Literal { var: self.var, negated: !self.negated }
    }

    fn value(self, assignment: &[bool]) -> bool {
        assignment[self.var] != self.negated
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Nae3SatInstance {
    pub num_vars: usize,
    pub clauses: Vec<[Literal; 3]>,
}

impl Nae3SatInstance {
    pub fn new(num_vars: usize, clauses: Vec<[Literal; 3]>) -> Result<Self> {
        for (i, c) in clauses.iter().enumerate() {
            if c.iter().any(|l| l.var >= num_vars) {
                return Err(precondition(format!("clause {i} uses an undeclared variable")));
            }
            if c[0].var == c[1].var || c[0].var == c[2].var || c[1].var == c[2].var {
                return Err(precondition(format!("clause {i} repeats a variable")));
            }
        }
        Ok(Nae3SatInstance { num_vars, clauses })
    }

    /// Every clause has a true and a false literal.
    pub fn satisfied_by(&self, assignment: &[bool]) -> bool {
        self.clauses.iter().all(|c| {
            let t = c.iter().filter(|l| l.value(assignment)).count();
            t == 1 || t == 2
        })
    }
}

/// Exhaustive search over all `2^n` assignments.
pub fn solve_brute_force(inst: &Nae3SatInstance) -> Option<Vec<bool>> {
    assert!(inst.num_vars < 32, "brute force is for small instances");
    (0u32..1 << inst.num_vars)
        .map(|m| (0..inst.num_vars).map(|i| m >> i & 1 == 1).collect::<Vec<_>>())
        .find(|a| inst.satisfied_by(a))
}

pub struct Reduction {
    pub system: SetSystem,
    pub rho: Marginals,
    pub pi: RequirementTable,
}

pub fn reduce(inst: &Nae3SatInstance) -> Result<Reduction> {
    let mut labels = Vec::with_capacity(2 * inst.num_vars);
    for i in 0..inst.num_vars {
        labels.push(format!("y{i}"));
        labels.push(format!("!y{i}"));
    }
    let mut paths: Vec<Vec<usize>> = Vec::new();
    let mut add = |mut p: Vec<usize>| {
        p.sort_unstable();
        if !paths.contains(&p) {
            paths.push(p);
        }
    };
    for c in &inst.clauses {
        add(c.iter().map(|l| l.element()).collect());
        add(c.iter().map(|l| l.complement().element()).collect());
    }
    for i in 0..inst.num_vars {
        add(vec![2 * i, 2 * i + 1]);
    }
    let pi = RequirementTable::from_entries(paths.iter().map(|p| (p.clone(), Rational::one())))?;
    let system = SetSystem::explicit(labels, paths)?;
    let rho = Marginals::new(vec![rational::ratio(1, 2); 2 * inst.num_vars])?;
    Ok(Reduction { system, rho, pi })
}

/// Uniform clauses over three distinct variables with random signs.
pub fn random_instance<R: Rng + ?Sized>(rng: &mut R, num_vars: usize, num_clauses: usize) -> Result<Nae3SatInstance> {
    if num_vars < 3 && num_clauses > 0 {
        return Err(precondition("clauses need three distinct variables"));
    }
    let clauses = (0..num_clauses)
        .map(|_| {
            let vars = rand::seq::index::sample(rng, num_vars, 3);
            let mut lits = [Literal { var: 0, negated: false }; 3];
            for (slot, v) in lits.iter_mut().zip(vars.iter()) {
                *slot = Literal { var: v, negated: rng.gen_bool(0.5) };
            }
            lits
        })
        .collect();
    Nae3SatInstance::new(num_vars, clauses)
}
