//! Feasible decompositions: α-labels, the interval sweep, the extension lift,
//! independent rounding, verification and a brute-force LP oracle.

use std::collections::BTreeMap;

use num_bigint::{BigInt, RandBigInt};
use num_traits::{One, Signed, Zero};
use rand::Rng;

use crate::asp;
use crate::error::{precondition, structural, Error, Result};
use crate::lp::{solve_lp, LinearProgram, Relation, Sense};
use crate::rational::{self, Rational};
use crate::system::{
    sum_over, AffineRequirement, ElementId, ElementSet, Marginals, OrderedPath, Requirement, SetSystem,
    ENUMERATION_LIMIT,
};

/// Hard cap on the ground set for the subset-enumerating oracle.
pub const BRUTE_FORCE_LIMIT: usize = 20;

/// Interval offsets `α_e`; `None` marks elements outside the labeled set `U`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AlphaLabels {
    pub alpha: Vec<Option<Rational>>,
}

impl AlphaLabels {
    pub fn covered(&self) -> ElementSet {
        ElementSet::from_ids(self.alpha.len(), self.alpha.iter().enumerate().filter_map(|(e, a)| a.as_ref().map(|_| e)))
    }

    /// `ρ` with unlabeled entries zeroed.
    pub fn restrict(&self, v: &[Rational]) -> Vec<Rational> {
        v.iter().zip(&self.alpha).map(|(x, a)| if a.is_some() { x.clone() } else { Rational::zero() }).collect()
    }
}

/// One iteration of the label loop: the member found, its minimum restricted
/// cost, and the element that received a label.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AlphaStep {
    pub path: OrderedPath,
    pub restricted_cost: Rational,
    pub element: ElementId,
    pub alpha: Rational,
}

/// A finite distribution over subsets, kept in canonical form: each set is a
/// sorted id list, sets are distinct and sorted, all masses positive.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Decomposition {
    support: Vec<(Vec<ElementId>, Rational)>,
}

impl Decomposition {
    pub fn from_weighted(entries: impl IntoIterator<Item = (Vec<ElementId>, Rational)>) -> Result<Self> {
        let mut merged: BTreeMap<Vec<ElementId>, Rational> = BTreeMap::new();
        for (mut set, p) in entries {
            if p.is_negative() {
                return Err(structural("negative probability in decomposition"));
            }
            set.sort_unstable();
            if set.windows(2).any(|w| w[0] == w[1]) {
                return Err(structural("repeated element in a support set"));
            }
            *merged.entry(set).or_insert_with(Rational::zero) += p;
        }
        let support: Vec<_> = merged.into_iter().filter(|(_, p)| !p.is_zero()).collect();
        Ok(Decomposition { support })
    }

    /// The point mass on the empty set.
    pub fn empty_set() -> Self {
        Decomposition { support: vec![(Vec::new(), Rational::one())] }
    }

    pub fn support(&self) -> &[(Vec<ElementId>, Rational)] {
        &self.support
    }

    pub fn len(&self) -> usize {
        self.support.len()
    }

    pub fn is_empty(&self) -> bool {
        self.support.is_empty()
    }

    pub fn total_mass(&self) -> Rational {
        self.support.iter().map(|(_, p)| p).sum()
    }

    pub fn marginals(&self, n: usize) -> Vec<Rational> {
        let mut m = vec![Rational::zero(); n];
        for (set, p) in &self.support {
            for &e in set {
                m[e] += p;
            }
        }
        m
    }

    /// `Pr[S ∩ P ≠ ∅]`.
    pub fn coverage(&self, path: &OrderedPath) -> Rational {
        self.support.iter().filter(|(s, _)| path.intersects(s)).map(|(_, p)| p).sum()
    }

    pub fn mass_of(&self, set: &[ElementId]) -> Rational {
        let mut key = set.to_vec();
        key.sort_unstable();
        self.support
            .binary_search_by(|(s, _)| s.as_slice().cmp(&key))
            .map(|i| self.support[i].1.clone())
            .unwrap_or_else(|_| Rational::zero())
    }

    /// Draws a set with exactly its listed probability.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<ElementId> {
        let denom = self.support.iter().fold(BigInt::one(), |acc, (_, p)| num_integer::lcm(acc, p.denom().clone()));
        let ticks = rng.gen_bigint_range(&BigInt::zero(), &denom);
        let point = Rational::new(ticks, denom);
        let mut acc = Rational::zero();
        for (set, p) in &self.support {
            acc += p;
            if point < acc {
                return set.clone();
            }
        }
        self.support.last().map(|(s, _)| s.clone()).unwrap_or_default()
    }
}

fn validate_lengths(system: &SetSystem, rho: &Marginals, mu: &AffineRequirement) -> Result<()> {
    if rho.len() != system.len() || mu.len() != system.len() {
        return Err(precondition("marginals or mu do not match the ground set size"));
    }
    Ok(())
}

fn star_violation(path: OrderedPath, rho: &Marginals, mu: &AffineRequirement) -> Error {
    let covered = path.cost(rho.as_slice());
    let required = mu.pi(&path);
    Error::InfeasibleMarginals { witness: path, covered: Box::new(covered), required: Box::new(required) }
}

fn combined_weights(rho: &Marginals, mu: &AffineRequirement) -> Vec<Rational> {
    rho.as_slice().iter().zip(mu.as_slice()).map(|(r, m)| r + m).collect()
}

/// Labels for an abstract network given by its membership oracle.
///
/// Grows `U` one element at a time: find a member minimizing the weight of
/// its labeled part, and label its first unlabeled element by the weight of
/// its strict prefix, clipped at `1 − ρ_e`.
pub fn compute_alpha_abstract(
    system: &SetSystem,
    rho: &Marginals,
    mu: &AffineRequirement,
) -> Result<(AlphaLabels, Vec<AlphaStep>)> {
    validate_lengths(system, rho, mu)?;
    if !system.is_abstract_network() {
        return Err(precondition("label computation needs an abstract network"));
    }
    let n = system.len();
    let w = combined_weights(rho, mu);
    if let Some((p, c)) = asp::shortest_path(system, &w)? {
        if c < Rational::one() {
            return Err(star_violation(p, rho, mu));
        }
    }
    let mut u = ElementSet::empty(n);
    let mut alpha = vec![None; n];
    let mut steps = Vec::new();
    while let Some((p, c)) = asp::restricted_shortest_path(system, &u, &w)? {
        if c >= Rational::one() {
            break;
        }
        let &e = p
            .elements()
            .iter()
            .find(|&&x| !u.contains(x))
            .ok_or_else(|| structural("member of weight below 1 lies inside U; condition check is inconsistent"))?;
        let a = rational::min(&sum_over(p.strict_prefix(e), &w), &(Rational::one() - rho.get(e)));
        u.insert(e);
        alpha[e] = Some(a.clone());
        steps.push(AlphaStep { path: p, restricted_cost: c, element: e, alpha: a });
        if steps.len() > n {
            return Err(structural("label loop exceeded the ground set size"));
        }
    }
    Ok((AlphaLabels { alpha }, steps))
}

/// Labels for a digraph by one label-setting run over node and arc costs `ρ + μ`.
///
/// A node's label excludes its own cost; an arc `(v, w)` is labeled with
/// `dist(v) + c(v)`. Nothing is relaxed out of `t`. The dummy `(v, t)` arcs of
/// weight `μ = 1` that make every `s`-`v` path extendable are left implicit:
/// their candidate labels are at least 1, so they never beat the clip at `1 − ρ`.
pub fn compute_alpha_digraph(system: &SetSystem, rho: &Marginals, mu: &AffineRequirement) -> Result<AlphaLabels> {
    validate_lengths(system, rho, mu)?;
    let g = system.as_digraph().ok_or_else(|| precondition("digraph labels need a digraph backend"))?;
    let c = combined_weights(rho, mu);
    let nv = g.num_nodes;
    let mut dist: Vec<Option<Rational>> = vec![None; nv];
    let mut pred: Vec<Option<usize>> = vec![None; nv];
    let mut done = vec![false; nv];
    dist[g.s] = Some(Rational::zero());
    loop {
        let mut pick: Option<usize> = None;
        for v in 0..nv {
            if done[v] {
                continue;
            }
            if let Some(d) = &dist[v] {
                if pick.is_none_or(|p| d < dist[p].as_ref().expect("finite")) {
                    pick = Some(v);
                }
            }
        }
        let Some(v) = pick else { break };
        done[v] = true;
        if v == g.t {
            continue;
        }
        let through = dist[v].as_ref().expect("finite") + &c[v];
        for &k in g.out_arcs(v) {
            let w = g.arcs[k].1;
            if done[w] {
                continue;
            }
            let cand = &through + &c[g.arc_element(k)];
            if dist[w].as_ref().is_none_or(|d| cand < *d) {
                dist[w] = Some(cand);
                pred[w] = Some(k);
            }
        }
    }

    if let Some(dt) = &dist[g.t] {
        if dt + &c[g.t] < Rational::one() {
            let mut arcs = Vec::new();
            let mut v = g.t;
            while let Some(k) = pred[v] {
                arcs.push(k);
                v = g.arcs[k].0;
            }
            arcs.reverse();
            return Err(star_violation(g.path_from_arcs(&arcs)?, rho, mu));
        }
    }

    let mut alpha = vec![None; system.len()];
    let clip = |e: ElementId, a: Rational| Some(rational::min(&a, &(Rational::one() - rho.get(e))));
    for v in 0..nv {
        if let Some(d) = &dist[v] {
            alpha[v] = clip(v, d.clone());
        }
    }
    for (k, &(v, _)) in g.arcs.iter().enumerate() {
        if v == g.t {
            continue;
        }
        if let Some(d) = &dist[v] {
            let e = g.arc_element(k);
            alpha[e] = clip(e, d + &c[v]);
        }
    }
    Ok(AlphaLabels { alpha })
}

/// The law of `S_τ = {e : α_e ≤ τ < α_e + ρ_e}` for `τ` uniform on `[0, 1)`.
///
/// Unlabeled elements are treated as `ρ_e = 0`.
pub fn alpha_to_distribution(alpha: &AlphaLabels, rho: &Marginals) -> Result<Decomposition> {
    if alpha.alpha.len() != rho.len() {
        return Err(precondition("labels and marginals differ in length"));
    }
    let mut intervals = Vec::new();
    for (e, a) in alpha.alpha.iter().enumerate() {
        let Some(a) = a else { continue };
        let r = rho.get(e);
        if r.is_zero() {
            continue;
        }
        let end = a + r;
        if a.is_negative() || end > Rational::one() {
            return Err(structural(format!("label of element {e} leaves [0, 1 - rho]")));
        }
        intervals.push((e, a.clone(), end));
    }
    let mut cuts: Vec<Rational> = vec![Rational::zero(), Rational::one()];
    for (_, a, b) in &intervals {
        cuts.push(a.clone());
        cuts.push(b.clone());
    }
    cuts.sort();
    cuts.dedup();
    let mut entries = Vec::with_capacity(cuts.len());
    for w in cuts.windows(2) {
        let (lo, hi) = (&w[0], &w[1]);
        let set: Vec<ElementId> = intervals.iter().filter(|(_, a, b)| a <= lo && lo < b).map(|(e, _, _)| *e).collect();
        entries.push((set, hi - lo));
    }
    Decomposition::from_weighted(entries)
}

/// Lifts a decomposition with marginals `ρ′ ≤ ρ` to one with marginals `ρ`.
///
/// Each set is joined with an independent threshold set
/// `{e : τ ≤ (ρ_e − ρ′_e) / (1 − ρ′_e)}`, so no hit probability can drop.
pub fn extend_decomposition(x: &Decomposition, rho_small: &Marginals, rho: &Marginals) -> Result<Decomposition> {
    if rho_small.len() != rho.len() {
        return Err(precondition("marginal vectors differ in length"));
    }
    let mut theta = Vec::with_capacity(rho.len());
    for e in 0..rho.len() {
        let (small, big) = (rho_small.get(e), rho.get(e));
        if small > big {
            return Err(precondition(format!("lift target is below the source marginal at element {e}")));
        }
        if small == big {
            theta.push(Rational::zero());
        } else {
            // `small < big ≤ 1`, so the denominator is positive.
            theta.push((big - small) / (Rational::one() - small));
        }
    }
    join_threshold_sets(x, &theta)
}

fn join_threshold_sets(x: &Decomposition, theta: &[Rational]) -> Result<Decomposition> {
    let mut levels: Vec<Rational> = theta.iter().filter(|t| t.is_positive()).cloned().collect();
    if levels.is_empty() {
        return Ok(x.clone());
    }
    levels.push(Rational::zero());
    levels.push(Rational::one());
    levels.sort();
    levels.dedup();
    let mut threshold_sets = Vec::new();
    for w in levels.windows(2) {
        let set: Vec<ElementId> = (0..theta.len()).filter(|&e| theta[e] >= w[1]).collect();
        threshold_sets.push((set, &w[1] - &w[0]));
    }
    let mut entries = Vec::with_capacity(x.len() * threshold_sets.len());
    for (s, p) in x.support() {
        for (t, q) in &threshold_sets {
            let mut u = s.clone();
            u.extend(t.iter().copied().filter(|e| s.binary_search(e).is_err()));
            entries.push((u, p * q));
        }
    }
    Decomposition::from_weighted(entries)
}

/// Every element included independently with probability `ρ_e`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ProductDistribution {
    pub rho: Marginals,
}

pub fn independent_rounding(rho: &Marginals) -> ProductDistribution {
    ProductDistribution { rho: rho.clone() }
}

impl ProductDistribution {
    pub fn coverage(&self, path: &OrderedPath) -> Rational {
        let miss = path.elements().iter().fold(Rational::one(), |acc, &e| acc * (Rational::one() - self.rho.get(e)));
        Rational::one() - miss
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<ElementId> {
        (0..self.rho.len())
            .filter(|&e| {
                let r = self.rho.get(e);
                let d = r.denom();
                rng.gen_bigint_range(&BigInt::zero(), d) < *r.numer()
            })
            .collect()
    }
}

/// `1 − (1 − π/k)^k`, the exact lower bound on product coverage of a member of
/// size `k` whose marginals sum to at least `π`.
pub fn rounding_bound(pi: &Rational, k: usize) -> Rational {
    let base = Rational::one() - pi / Rational::from_integer(BigInt::from(k));
    Rational::one() - num_traits::pow(base, k)
}

/// A rational upper bound on `1 − 1/e`, rounded up at `digits` decimal places.
///
/// The alternating series for `1/e` is summed to an odd number of terms, which
/// undershoots `1/e`; rounding `1 −` that partial sum upward keeps the bound.
pub fn one_minus_inv_e_upper(digits: usize) -> Rational {
    let scale = Rational::from_integer(num_traits::pow(BigInt::from(10), digits));
    let tolerance = Rational::one() / (&scale * Rational::from_integer(BigInt::from(1000)));
    let mut partial = Rational::zero();
    let mut term = Rational::one();
    let mut k: u64 = 0;
    loop {
        if k.is_multiple_of(2) {
            partial += &term;
        } else {
            partial -= &term;
        }
        if k % 2 == 1 && term < tolerance {
            break;
        }
        k += 1;
        term /= Rational::from_integer(BigInt::from(k));
    }
    let upper = Rational::one() - partial;
    (upper * &scale).ceil() / scale
}

/// Outcome of checking a decomposition against marginals and requirements.
#[derive(Debug, Clone)]
pub struct VerificationReport {
    /// `Σ_{S∋e} x_S − ρ_e` per element.
    pub marginal_residuals: Vec<Rational>,
    /// `Σ_S x_S − 1`.
    pub mass_residual: Rational,
    pub paths_checked: usize,
    /// `min_P coverage(P) − π_P` and its argmin.
    pub min_slack: Option<Rational>,
    pub worst_path: Option<OrderedPath>,
    pub problems: Vec<String>,
}

impl VerificationReport {
    pub fn passed(&self) -> bool {
        self.problems.is_empty()
            && self.mass_residual.is_zero()
            && self.marginal_residuals.iter().all(Zero::is_zero)
            && self.min_slack.as_ref().is_none_or(|s| !s.is_negative())
    }
}

/// Exact check of marginals, total mass, and slack on every member.
pub fn verify_decomposition(
    x: &Decomposition,
    rho: &Marginals,
    req: &Requirement,
    system: &SetSystem,
) -> Result<VerificationReport> {
    let n = system.len();
    if rho.len() != n {
        return Err(precondition("marginals do not match the ground set size"));
    }
    let mut problems = Vec::new();
    for (set, p) in x.support() {
        if let Some(&bad) = set.iter().find(|&&e| e >= n) {
            problems.push(format!("support set mentions unknown element {bad}"));
        }
        if !p.is_positive() {
            problems.push("non-positive probability in support".into());
        }
    }
    if !problems.is_empty() {
        return Ok(VerificationReport {
            marginal_residuals: Vec::new(),
            mass_residual: x.total_mass() - Rational::one(),
            paths_checked: 0,
            min_slack: None,
            worst_path: None,
            problems,
        });
    }
    let marginal_residuals: Vec<Rational> =
        x.marginals(n).into_iter().zip(rho.as_slice()).map(|(m, r)| m - r).collect();
    let mass_residual = x.total_mass() - Rational::one();
    let members = system.enumerate_members(ENUMERATION_LIMIT)?;
    let mut worst: Option<(Rational, OrderedPath)> = None;
    for p in &members {
        let slack = x.coverage(p) - req.value(p)?;
        if worst.as_ref().is_none_or(|(w, _)| slack < *w) {
            worst = Some((slack, p.clone()));
        }
    }
    let (min_slack, worst_path) = match worst {
        Some((s, p)) => (Some(s), Some(p)),
        None => (None, None),
    };
    Ok(VerificationReport {
        marginal_residuals,
        mass_residual,
        paths_checked: members.len(),
        min_slack,
        worst_path,
        problems,
    })
}

/// Decides feasibility by an LP over every subset of the ground set.
///
/// Subsets containing an element with `ρ_e = 0`, or missing one with
/// `ρ_e = 1`, are fixed at zero mass by the marginal rows anyway and are left
/// out. Members with `π_P ≤ 0` or a forced element impose nothing beyond the
/// mass row. A member with `π_P = 1` must meet every subset of positive
/// mass, so subsets missing it are left out as well.
pub fn brute_force_feasibility(
    system: &SetSystem,
    req: &Requirement,
    rho: &Marginals,
) -> Result<Option<Decomposition>> {
    let n = system.len();
    if n > BRUTE_FORCE_LIMIT {
        return Err(Error::SizeGuard { what: "ground set size", actual: n, limit: BRUTE_FORCE_LIMIT });
    }
    if rho.len() != n {
        return Err(precondition("marginals do not match the ground set size"));
    }
    let forced: Vec<ElementId> = (0..n).filter(|&e| rho.get(e).is_one()).collect();
    let free: Vec<ElementId> = (0..n).filter(|&e| !rho.get(e).is_one() && !rho.get(e).is_zero()).collect();
    let bit_of = |e: ElementId| free.iter().position(|&f| f == e);

    // Row data: target, relation, and the free-element mask a column must meet.
    let mut targets = vec![Rational::one()];
    let mut relations = vec![Relation::Eq];
    let mut hit_masks: Vec<Option<u64>> = vec![None];
    for (i, _) in free.iter().enumerate() {
        targets.push(rho.get(free[i]).clone());
        relations.push(Relation::Eq);
        hit_masks.push(Some(1 << i));
    }
    let num_marginal_rows = targets.len();
    for p in system.enumerate_members(ENUMERATION_LIMIT)? {
        let pi = req.value(&p)?;
        if !pi.is_positive() || p.elements().iter().any(|e| forced.contains(e)) {
            continue;
        }
        let mask = p.elements().iter().filter_map(|&e| bit_of(e)).fold(0u64, |m, b| m | 1 << b);
        if mask == 0 {
            return Ok(None);
        }
        targets.push(pi);
        relations.push(Relation::Ge);
        hit_masks.push(Some(mask));
    }
    // A member with `π = 1` must meet every sampled set, so only such sets
    // can carry mass and the row itself is implied.
    let mut must_hit: Vec<u64> = Vec::new();
    let mut k = num_marginal_rows;
    while k < targets.len() {
        if targets[k] > Rational::one() {
            return Ok(None);
        }
        if targets[k].is_one() {
            must_hit.push(hit_masks[k].expect("coverage rows carry a mask"));
            targets.remove(k);
            relations.remove(k);
            hit_masks.remove(k);
        } else {
            k += 1;
        }
    }
    let columns: Vec<u64> = (0u64..1 << free.len()).filter(|m| must_hit.iter().all(|h| m & h != 0)).collect();
    if columns.is_empty() {
        return Ok(None);
    }

    let mut lp = LinearProgram::new(columns.len(), Sense::Minimize);
    for (i, h) in hit_masks.iter().enumerate() {
        let coeffs = columns
            .iter()
            .map(|&m| match h {
                None => Rational::one(),
                Some(h) if i < num_marginal_rows => indicator(m & h == *h),
                Some(h) => indicator(m & h != 0),
            })
            .collect::<Vec<_>>();
        if coeffs.iter().all(|c| c.is_zero()) {
            return Ok(None);
        }
        lp.add_constraint(coeffs, relations[i], targets[i].clone());
    }
    let sol = solve_lp(&lp)?;
    if !sol.is_optimal() {
        return Ok(None);
    }
    let entries = columns.iter().zip(&sol.values).map(|(&mask, p)| {
        let mut s = forced.clone();
        s.extend(free.iter().enumerate().filter(|(i, _)| mask >> i & 1 == 1).map(|(_, &e)| e));
        (s, p.clone())
    });
    Ok(Some(Decomposition::from_weighted(entries)?))
}

fn indicator(b: bool) -> Rational {
    if b {
        Rational::one()
    } else {
        Rational::zero()
    }
}

/// Which label computation produced a decomposition.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LabelRoute {
    Abstract,
    Digraph,
}

/// Pipeline output: the interval distribution for the restricted marginals
/// `ρ̄` (before the lift) and the final decomposition for `ρ`.
#[derive(Debug, Clone)]
pub struct AffineDecomposition {
    pub alpha: AlphaLabels,
    pub steps: Vec<AlphaStep>,
    pub restricted_rho: Marginals,
    pub pre_lift: Decomposition,
    pub decomposition: Decomposition,
    pub route: LabelRoute,
}

/// Labels, interval sweep and lift, in one call.
pub fn decompose_affine(
    system: &SetSystem,
    rho: &Marginals,
    mu: &AffineRequirement,
    route: LabelRoute,
) -> Result<AffineDecomposition> {
    let (alpha, steps) = match route {
        LabelRoute::Abstract => compute_alpha_abstract(system, rho, mu)?,
        LabelRoute::Digraph => (compute_alpha_digraph(system, rho, mu)?, Vec::new()),
    };
    let restricted_rho = Marginals::new(alpha.restrict(rho.as_slice()))?;
    let pre_lift = alpha_to_distribution(&alpha, &restricted_rho)?;
    let decomposition = extend_decomposition(&pre_lift, &restricted_rho, rho)?;
    Ok(AffineDecomposition { alpha, steps, restricted_rho, pre_lift, decomposition, route })
}
