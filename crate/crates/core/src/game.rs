//! The routing/interdiction security game: LP pair by column generation,
//! equilibrium assembly, and exact best-response verification.

use num_traits::{One, Signed, Zero};

use crate::asp;
use crate::decomp::Decomposition;
use crate::error::{precondition, structural, Error, Result};
use crate::lp::{solve_lp, LinearProgram, Relation, Sense};
use crate::pipeline::{self, Method};
use crate::rational::{self, Rational};
use crate::system::{AffineRequirement, Marginals, OrderedPath, SetSystem, ENUMERATION_LIMIT};

/// Largest ground set for which deviations are enumerated.
pub const VERIFY_LIMIT: usize = 14;

#[derive(Debug, Clone)]
pub struct GameInstance {
    pub system: SetSystem,
    /// Capacities.
    pub u: Vec<Rational>,
    /// Transportation costs.
    pub c: Vec<Rational>,
    /// Interdiction costs.
    pub d: Vec<Rational>,
}

impl GameInstance {
    pub fn new(system: SetSystem, u: Vec<Rational>, c: Vec<Rational>, d: Vec<Rational>) -> Result<Self> {
        let n = system.len();
        for (name, v) in [("u", &u), ("c", &c), ("d", &d)] {
            if v.len() != n {
                return Err(precondition(format!("{name} has length {}, expected {n}", v.len())));
            }
            if v.iter().any(|x| x.is_negative()) {
                return Err(precondition(format!("{name} has a negative entry")));
            }
        }
        Ok(GameInstance { system, u, c, d })
    }

    /// `π^c_P = 1 − Σ_{e∈P} c_e`.
    pub fn pi_c(&self, p: &OrderedPath) -> Rational {
        Rational::one() - p.cost(&self.c)
    }
}

/// Optimal primal flow on generated columns and the optimal dual pair.
#[derive(Debug, Clone)]
pub struct LpPair {
    pub value: Rational,
    /// Positive path flows.
    pub flow: Vec<(OrderedPath, Rational)>,
    pub eta: Vec<Rational>,
    pub rho: Vec<Rational>,
    pub columns: Vec<OrderedPath>,
    pub pricing_rounds: usize,
}

fn master(instance: &GameInstance, columns: &[OrderedPath]) -> LinearProgram {
    let n = instance.system.len();
    let mut lp = LinearProgram::new(columns.len(), Sense::Maximize);
    lp.objective = columns.iter().map(|p| instance.pi_c(p)).collect();
    for caps in [&instance.u, &instance.d] {
        for e in 0..n {
            let row = columns.iter().map(|p| if p.contains(e) { Rational::one() } else { Rational::zero() }).collect();
            lp.add_constraint(row, Relation::Le, caps[e].clone());
        }
    }
    lp
}

/// Solves the routing LP by column generation and reads `(η*, ρ*)` from the
/// capacity and interdiction-cost row duals.
///
/// Pricing looks for a member with `Σ (c + η + ρ) < 1`; once none exists the
/// duals are feasible for every member, not only the generated ones.
pub fn solve_lps(instance: &GameInstance) -> Result<LpPair> {
    let n = instance.system.len();
    let mut columns: Vec<OrderedPath> = Vec::new();
    let mut rounds = 0;
    loop {
        rounds += 1;
        let sol = solve_lp(&master(instance, &columns))?;
        if !sol.is_optimal() {
            return Err(structural(format!("restricted master ended {:?}", sol.status)));
        }
        let eta = sol.duals[..n].to_vec();
        let rho = sol.duals[n..].to_vec();
        let gamma: Vec<Rational> = (0..n).map(|e| &instance.c[e] + &eta[e] + &rho[e]).collect();
        match asp::min_cost_member(&instance.system, &gamma)? {
            Some((p, cost)) if cost < Rational::one() => {
                if columns.contains(&p) {
                    return Err(structural("pricing returned a column already in the master"));
                }
                columns.push(p);
            }
            _ => {
                let dual_value: Rational = (0..n).map(|e| &instance.u[e] * &eta[e] + &instance.d[e] * &rho[e]).sum();
                if dual_value != sol.objective {
                    return Err(structural("routing and interdiction LP values differ"));
                }
                let flow = columns
                    .iter()
                    .zip(&sol.values)
                    .filter(|(_, f)| f.is_positive())
                    .map(|(p, f)| (p.clone(), f.clone()))
                    .collect();
                return Ok(LpPair { value: sol.objective, flow, eta, rho, columns, pricing_rounds: rounds });
            }
        }
    }
}

/// Value of the routing LP over every enumerated member at once.
pub fn full_lp_value(instance: &GameInstance) -> Result<Rational> {
    let members = instance.system.enumerate_members(ENUMERATION_LIMIT)?;
    let sol = solve_lp(&master(instance, &members))?;
    if !sol.is_optimal() {
        return Err(structural("full routing LP is not optimal"));
    }
    Ok(sol.objective)
}

#[derive(Debug, Clone)]
pub struct GameSolution {
    pub lps: LpPair,
    /// `ρ*` capped at 1 and `μ = c + η*` capped at 1; see `build_equilibrium`.
    pub rho_star: Marginals,
    pub mu: AffineRequirement,
    /// σ_R is the point mass on `lps.flow`.
    pub sigma_i: Decomposition,
    pub method: Method,
}

/// Pairs the optimal flow with a decomposition of `ρ*` for `μ = c + η*`.
///
/// Capping `ρ*_e` at 1 keeps every member constraint satisfied and cannot raise
/// the objective. Capping `μ_e` at 1 only touches members whose requirement is
/// already at most 0. So the capped pair describes the same equilibria.
pub fn build_equilibrium(instance: &GameInstance, lps: LpPair) -> Result<GameSolution> {
    let one = Rational::one();
    let rho_star = Marginals::new(lps.rho.iter().map(|r| rational::min(r, &one)).collect())?;
    let mu_raw: Vec<Rational> = instance.c.iter().zip(&lps.eta).map(|(c, e)| c + e).collect();
    let mu = AffineRequirement::new(mu_raw.iter().map(|m| rational::min(m, &one)).collect())?;
    let outcome = pipeline::decompose_affine_auto(&instance.system, &rho_star, &mu)?;
    Ok(GameSolution { lps, rho_star, mu, sigma_i: outcome.decomposition, method: outcome.method })
}

pub fn solve_game(instance: &GameInstance) -> Result<GameSolution> {
    let lps = solve_lps(instance)?;
    build_equilibrium(instance, lps)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EquilibriumReport {
    pub router_payoff: Rational,
    pub router_best_response: Rational,
    pub interdictor_payoff: Rational,
    pub interdictor_best_response: Rational,
}

impl EquilibriumReport {
    pub fn router_improvement(&self) -> Rational {
        &self.router_best_response - &self.router_payoff
    }

    pub fn interdictor_improvement(&self) -> Rational {
        &self.interdictor_best_response - &self.interdictor_payoff
    }

    pub fn passed(&self) -> bool {
        !self.router_improvement().is_positive() && !self.interdictor_improvement().is_positive()
    }
}

/// Expected payoffs of the pair `(flow, σ_I)` and each player's best deviation.
///
/// The router deviates to an LP optimum over all members under capacities
/// alone; the interdictor to the best of all `2^|E|` subsets.
pub fn verify_equilibrium(
    instance: &GameInstance,
    flow: &[(OrderedPath, Rational)],
    sigma_i: &Decomposition,
) -> Result<EquilibriumReport> {
    let n = instance.system.len();
    if n > VERIFY_LIMIT {
        return Err(Error::SizeGuard { what: "ground set size", actual: n, limit: VERIFY_LIMIT });
    }
    let gain = |p: &OrderedPath| Rational::one() - sigma_i.coverage(p) - p.cost(&instance.c);
    let router_payoff: Rational = flow.iter().map(|(p, f)| f * gain(p)).sum();

    let members = instance.system.enumerate_members(ENUMERATION_LIMIT)?;
    let mut lp = LinearProgram::new(members.len(), Sense::Maximize);
    lp.objective = members.iter().map(gain).collect();
    for e in 0..n {
        let row = members.iter().map(|p| if p.contains(e) { Rational::one() } else { Rational::zero() }).collect();
        lp.add_constraint(row, Relation::Le, instance.u[e].clone());
    }
    let br = solve_lp(&lp)?;
    if !br.is_optimal() {
        return Err(structural("router deviation LP is not optimal"));
    }
    let router_best_response = br.objective;

    let marg = sigma_i.marginals(n);
    let interdictor_payoff: Rational = flow.iter().map(|(p, f)| f * sigma_i.coverage(p)).sum::<Rational>()
        - (0..n).map(|e| &instance.d[e] * &marg[e]).sum::<Rational>();
    let masks: Vec<(u32, &Rational)> =
        flow.iter().map(|(p, f)| (p.elements().iter().fold(0u32, |m, &e| m | 1 << e), f)).collect();
    let mut interdictor_best_response: Option<Rational> = None;
    for s in 0u32..(1u32 << n) {
        let hit: Rational = masks.iter().filter(|(m, _)| m & s != 0).map(|(_, f)| *f).sum();
        let cost: Rational = (0..n).filter(|&e| s >> e & 1 == 1).map(|e| &instance.d[e]).sum();
        let v = hit - cost;
        if interdictor_best_response.as_ref().is_none_or(|b| v > *b) {
            interdictor_best_response = Some(v);
        }
    }
    Ok(EquilibriumReport {
        router_payoff,
        router_best_response,
        interdictor_payoff,
        interdictor_best_response: interdictor_best_response.expect("the empty set is a strategy"),
    })
}
