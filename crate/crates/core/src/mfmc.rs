//! Decompositions for general systems with the weak max-flow/min-cut property,
//! through an explicit convex decomposition of `y = ρ + μ` over minimal covers.

use num_traits::{One, Signed, Zero};

use crate::asp;
use crate::decomp::{extend_decomposition, Decomposition};
use crate::error::{precondition, structural, Error, Result};
use crate::lp::{solve_lp, LinearProgram, Relation, Sense};
use crate::rational::{self, Rational};
use crate::system::{
    check_condition_star, AffineRequirement, ElementId, Marginals, Requirement, SetSystem, ENUMERATION_LIMIT,
};

pub const COVER_LIMIT: usize = 20;

/// Inclusion-minimal transversals, each a sorted id list, in ascending bitmask order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CoverFamily {
    pub covers: Vec<Vec<ElementId>>,
}

pub fn enumerate_minimal_covers(system: &SetSystem) -> Result<CoverFamily> {
    let n = system.len();
    if n > COVER_LIMIT {
        return Err(Error::SizeGuard { what: "ground set size", actual: n, limit: COVER_LIMIT });
    }
    let masks: Vec<u32> = system
        .enumerate_members(ENUMERATION_LIMIT)?
        .iter()
        .map(|p| p.elements().iter().fold(0u32, |m, &e| m | 1 << e))
        .collect();
    let hits_all = |s: u32| masks.iter().all(|&m| m & s != 0);
    let mut covers = Vec::new();
    for s in 0u32..(1u32 << n) {
        if !hits_all(s) {
            continue;
        }
        let minimal = (0..n).filter(|&e| s >> e & 1 == 1).all(|e| !hits_all(s & !(1 << e)));
        if minimal {
            covers.push((0..n).filter(|&e| s >> e & 1 == 1).collect());
        }
    }
    Ok(CoverFamily { covers })
}

/// `y = Σ_S λ_S 1_S + r` with `λ` a probability vector on covers and `r ≥ 0`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CoverDecomposition {
    pub lambda: Vec<(Vec<ElementId>, Rational)>,
    pub residual: Vec<Rational>,
}

/// Solves for a basic `(λ, r)`, so at most `|E| + 1` covers carry mass.
pub fn cover_decompose(y: &[Rational], covers: &CoverFamily) -> Result<Option<CoverDecomposition>> {
    if y.iter().any(|v| v.is_negative()) {
        return Err(precondition("cover decomposition needs y >= 0"));
    }
    let n = y.len();
    let k = covers.covers.len();
    let mut lp = LinearProgram::new(k + n, Sense::Minimize);
    let mut simplex = vec![Rational::zero(); k + n];
    for v in simplex.iter_mut().take(k) {
        *v = Rational::one();
    }
    lp.add_constraint(simplex, Relation::Eq, Rational::one());
    for e in 0..n {
        let mut row = vec![Rational::zero(); k + n];
        for (j, s) in covers.covers.iter().enumerate() {
            if s.binary_search(&e).is_ok() {
                row[j] = Rational::one();
            }
        }
        row[k + e] = Rational::one();
        lp.add_constraint(row, Relation::Eq, y[e].clone());
    }
    let sol = solve_lp(&lp)?;
    if !sol.is_optimal() {
        return Ok(None);
    }
    let lambda: Vec<(Vec<ElementId>, Rational)> = covers
        .covers
        .iter()
        .zip(&sol.values)
        .filter(|(_, v)| v.is_positive())
        .map(|(s, v)| (s.clone(), v.clone()))
        .collect();
    let residual = sol.values[k..].to_vec();
    if lambda.len() > n + 1 {
        return Err(structural("basic cover decomposition has more than |E|+1 atoms"));
    }
    let mut recomposed = residual.clone();
    for (s, l) in &lambda {
        for &e in s {
            recomposed[e] += l;
        }
    }
    if recomposed != y {
        return Err(structural("cover decomposition does not reproduce y"));
    }
    Ok(Some(CoverDecomposition { lambda, residual }))
}

#[derive(Debug, Clone)]
pub struct MfmcDecomposition {
    pub cover: CoverDecomposition,
    /// `Pr[e ∈ T₂] = min{ρ_e / (y_e − r_e), 1}`, zero where `y_e = r_e`.
    pub thresholds: Vec<Rational>,
    /// Law of `T = T₁ ∩ T₂` and its marginals `min{ρ_e, y_e − r_e}`.
    pub pre_lift: Decomposition,
    pub pre_lift_rho: Marginals,
    pub decomposition: Decomposition,
}

/// Feasible decomposition for affine requirements on a weak-MFMC system.
///
/// `T₁` is drawn from the cover weights `λ`, `T₂` is an independent threshold
/// set, and `T₁ ∩ T₂` is lifted to the exact marginals. An infeasible cover
/// LP means `y` is not in the integer hull: the system is not weak-MFMC.
pub fn mfmc_decomposition(system: &SetSystem, rho: &Marginals, mu: &AffineRequirement) -> Result<MfmcDecomposition> {
    let n = system.len();
    if rho.len() != n || mu.len() != n {
        return Err(precondition("marginals or mu do not match the ground set size"));
    }
    let verdict = check_condition_star(system, rho, &Requirement::Affine(mu.clone()))?;
    if !verdict.holds {
        let witness = verdict.witness.expect("violations carry a witness");
        let covered = witness.cost(rho.as_slice());
        let required = mu.pi(&witness);
        return Err(Error::InfeasibleMarginals { witness, covered: Box::new(covered), required: Box::new(required) });
    }
    let y: Vec<Rational> = rho.as_slice().iter().zip(mu.as_slice()).map(|(r, m)| r + m).collect();
    let covers = enumerate_minimal_covers(system)?;
    let cover = cover_decompose(&y, &covers)?.ok_or(Error::NotWeakMfmc)?;

    let thresholds: Vec<Rational> = (0..n)
        .map(|e| {
            let cap = &y[e] - &cover.residual[e];
            if cap.is_positive() {
                rational::min(&(rho.get(e) / cap), &Rational::one())
            } else {
                Rational::zero()
            }
        })
        .collect();
    let t2 = threshold_law(&thresholds);
    let mut entries = Vec::with_capacity(cover.lambda.len() * t2.len());
    for (s, l) in &cover.lambda {
        for (t, q) in &t2 {
            let both: Vec<ElementId> = s.iter().copied().filter(|e| t.binary_search(e).is_ok()).collect();
            entries.push((both, l * q));
        }
    }
    let pre_lift = Decomposition::from_weighted(entries)?;
    let pre_lift_rho = Marginals::new(pre_lift.marginals(n))?;
    for e in 0..n {
        let expected = rational::min(rho.get(e), &(&y[e] - &cover.residual[e]));
        if *pre_lift_rho.get(e) != expected {
            return Err(structural(format!("intersection marginal of element {e} is off")));
        }
    }
    let decomposition = extend_decomposition(&pre_lift, &pre_lift_rho, rho)?;
    Ok(MfmcDecomposition { cover, thresholds, pre_lift, pre_lift_rho, decomposition })
}

/// Law of `{e : τ < θ_e}` for `τ` uniform on `[0, 1)`.
fn threshold_law(theta: &[Rational]) -> Vec<(Vec<ElementId>, Rational)> {
    let mut levels: Vec<Rational> = theta.iter().filter(|t| t.is_positive()).cloned().collect();
    levels.push(Rational::zero());
    levels.push(Rational::one());
    levels.sort();
    levels.dedup();
    levels.windows(2).map(|w| ((0..theta.len()).filter(|&e| theta[e] >= w[1]).collect(), &w[1] - &w[0])).collect()
}

/// Lowers each `ρ_e` in id order as far as the covering condition allows.
///
/// With `ρ_e` set to zero, let `g` be the minimum of `ρ + μ` over members.
/// If `g < 1` the minimizer contains `e` and `ρ_e = 1 − g` is the smallest
/// feasible value; otherwise `ρ_e = 0`. Afterwards every element with positive
/// marginal lies on a member where the condition is tight.
pub fn minimalize_rho(system: &SetSystem, rho: &Marginals, mu: &AffineRequirement) -> Result<Marginals> {
    let n = system.len();
    if rho.len() != n || mu.len() != n {
        return Err(precondition("marginals or mu do not match the ground set size"));
    }
    let mut r = rho.as_slice().to_vec();
    let w = |r: &[Rational]| -> Vec<Rational> { r.iter().zip(mu.as_slice()).map(|(a, b)| a + b).collect() };
    if let Some((p, c)) = asp::min_cost_member(system, &w(&r))? {
        if c < Rational::one() {
            let covered = p.cost(&r);
            let required = mu.pi(&p);
            return Err(Error::InfeasibleMarginals {
                witness: p,
                covered: Box::new(covered),
                required: Box::new(required),
            });
        }
    }
    for e in 0..n {
        if r[e].is_zero() {
            continue;
        }
        let old = std::mem::replace(&mut r[e], Rational::zero());
        let g = match asp::min_cost_member(system, &w(&r))? {
            Some((_, g)) => g,
            None => Rational::one(),
        };
        if g < Rational::one() {
            let v = Rational::one() - g;
            debug_assert!(v <= old);
            r[e] = v;
        }
    }
    Marginals::new(r)
}
