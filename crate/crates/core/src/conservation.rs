//! Requirements obeying the conservation law on DAG paths and poset chains,
//! rewritten in affine form over arc weights.

use std::collections::{HashMap, VecDeque};
use std::sync::Arc;

use num_traits::{One, Signed, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::decomp::{self, AffineDecomposition, Decomposition, LabelRoute};
use crate::error::{precondition, structural, Error, Result};
use crate::lp::{self, LinearSystemSolution};
use crate::rational::{self, Rational};
use crate::system::{
    AffineRequirement, Backend, Digraph, ElementId, Marginals, OrderedPath, RequirementTable, SetSystem,
    ENUMERATION_LIMIT,
};

/// Up to this many nodes, `compute_mu` validates against every path.
pub const EXHAUSTIVE_NODE_LIMIT: usize = 12;
/// Random paths checked above that size, in addition to the basis.
pub const SAMPLED_PATHS: usize = 64;
const SAMPLE_SEED: u64 = 0x6d75;

/// The Hasse diagram of a poset as a digraph system, with virtual endpoints
/// where the poset lacks a unique minimum or maximum.
#[derive(Debug, Clone)]
pub struct HasseDag {
    pub system: SetSystem,
    /// Poset element carried by each digraph node; `None` for virtual nodes.
    pub element_of_node: Vec<Option<ElementId>>,
    pub virtual_source: bool,
    pub virtual_sink: bool,
    poset_size: usize,
    arc_index: HashMap<(usize, usize), usize>,
}

impl HasseDag {
    pub fn digraph(&self) -> &Digraph {
        self.system.as_digraph().expect("Hasse diagrams are digraph systems")
    }

    /// The maximal chain visited by an `s`-`t` path.
    pub fn chain_of(&self, path: &OrderedPath) -> Result<OrderedPath> {
        let g = self.digraph();
        let chain: Vec<ElementId> =
            path.elements().iter().filter(|&&e| !g.is_arc(e)).filter_map(|&v| self.element_of_node[v]).collect();
        OrderedPath::new(chain)
    }

    /// The `s`-`t` path through a maximal chain.
    pub fn path_of(&self, chain: &OrderedPath) -> Result<OrderedPath> {
        let g = self.digraph();
        let mut nodes = Vec::new();
        if self.virtual_source {
            nodes.push(g.s);
        }
        nodes.extend(chain.elements());
        if self.virtual_sink {
            nodes.push(g.t);
        }
        let arcs = nodes
            .windows(2)
            .map(|w| {
                self.arc_index
                    .get(&(w[0], w[1]))
                    .copied()
                    .ok_or_else(|| precondition(format!("{:?} is not a chain of covering pairs", chain)))
            })
            .collect::<Result<Vec<_>>>()?;
        let path = g.path_from_arcs(&arcs)?;
        if path.last() != g.t {
            return Err(precondition("chain does not end in a maximal element"));
        }
        Ok(path)
    }

    /// Lifts a chain requirement table to the diagram's paths.
    pub fn lift_requirement(&self, pi: &RequirementTable) -> RequirementTable {
        let pi = pi.clone();
        let this = Arc::new(self.clone());
        RequirementTable::oracle(move |p| pi.value(&this.chain_of(p)?))
    }

    /// Extends poset marginals by zero on arcs and virtual nodes.
    pub fn lift_marginals(&self, rho: &Marginals) -> Result<Marginals> {
        if rho.len() != self.poset_size {
            return Err(precondition("marginal vector length differs from poset size"));
        }
        let mut v = vec![Rational::zero(); self.system.len()];
        for (node, e) in self.element_of_node.iter().enumerate() {
            if let Some(e) = e {
                v[node] = rho.get(*e).clone();
            }
        }
        Marginals::new(v)
    }
}

fn fresh_label(taken: &[String], base: &str) -> String {
    let mut label = base.to_string();
    while taken.contains(&label) {
        label.push('\'');
    }
    label
}

/// Builds the covering digraph of a poset system. Node `i < |E|` is poset
/// element `i`; virtual `s` and `t` follow.
pub fn hasse_diagram(system: &SetSystem) -> Result<HasseDag> {
    let Backend::Poset(poset) = system.backend() else {
        return Err(precondition("Hasse diagrams need a poset system"));
    };
    let n = system.len();
    if n == 0 {
        return Err(structural("empty poset has no maximal chain"));
    }
    let mut labels: Vec<String> = system.ground().iter().map(|e| e.label.clone()).collect();
    let mut arcs = poset.covers.clone();
    let mut element_of_node: Vec<Option<ElementId>> = (0..n).map(Some).collect();

    let virtual_source = poset.minimal.len() != 1;
    let s = if virtual_source {
        let s = labels.len();
        labels.push(fresh_label(&labels, "s"));
        element_of_node.push(None);
        arcs.extend(poset.minimal.iter().map(|&m| (s, m)));
        s
    } else {
        poset.minimal[0]
    };
    // A one-element maximum that is also the minimum still needs a distinct sink.
    let virtual_sink = poset.maximal.len() != 1 || poset.maximal[0] == s;
    let t = if virtual_sink {
        let t = labels.len();
        labels.push(fresh_label(&labels, "t"));
        element_of_node.push(None);
        arcs.extend(poset.maximal.iter().map(|&m| (m, t)));
        t
    } else {
        poset.maximal[0]
    };
    let arc_index = arcs.iter().enumerate().map(|(k, &a)| (a, k)).collect();
    let dag = SetSystem::digraph(labels, arcs, s, t, None)?;
    Ok(HasseDag { system: dag, element_of_node, virtual_source, virtual_sink, poset_size: n, arc_index })
}

/// Spanning paths of the `s`-`t` path space.
#[derive(Debug, Clone)]
pub struct PathBasis {
    /// Nodes on some `s`-`t` path.
    pub live_nodes: Vec<bool>,
    pub live_arcs: Vec<bool>,
    /// Arborescence arc entering each live node other than `s`.
    pub tree_arc: Vec<Option<usize>>,
    pub non_tree: Vec<usize>,
    /// `P₀` first, then one path per non-tree arc in `non_tree` order.
    pub paths: Vec<OrderedPath>,
    pub arc_paths: Vec<Vec<usize>>,
}

fn reaches(num_nodes: usize, start: usize, next: impl Fn(usize) -> Vec<usize>) -> Vec<bool> {
    let mut seen = vec![false; num_nodes];
    seen[start] = true;
    let mut queue = VecDeque::from([start]);
    while let Some(v) = queue.pop_front() {
        for w in next(v) {
            if !seen[w] {
                seen[w] = true;
                queue.push_back(w);
            }
        }
    }
    seen
}

fn arc_incidence(g: &Digraph, live_arcs: &[bool], arcs: &[usize]) -> Vec<Rational> {
    let mut row = vec![Rational::zero(); g.arcs.len()];
    for &k in arcs {
        row[k] += Rational::one();
    }
    row.into_iter().enumerate().filter(|(k, _)| live_arcs[*k]).map(|(_, x)| x).collect()
}

pub fn path_basis(g: &Digraph) -> Result<PathBasis> {
    let from_s = reaches(g.num_nodes, g.s, |v| g.out_arcs(v).iter().map(|&k| g.arcs[k].1).collect());
    let mut into = vec![Vec::new(); g.num_nodes];
    for (k, &(v, w)) in g.arcs.iter().enumerate() {
        into[w].push((k, v));
    }
    let to_t = reaches(g.num_nodes, g.t, |w| into[w].iter().map(|&(_, v)| v).collect());
    if !from_s[g.t] {
        return Err(structural("sink is unreachable from the source"));
    }
    let live_nodes: Vec<bool> = (0..g.num_nodes).map(|v| from_s[v] && to_t[v]).collect();
    let live_arcs: Vec<bool> = g.arcs.iter().map(|&(v, w)| live_nodes[v] && live_nodes[w]).collect();

    let mut tree_arc = vec![None; g.num_nodes];
    let mut seen = vec![false; g.num_nodes];
    seen[g.s] = true;
    let mut queue = VecDeque::from([g.s]);
    while let Some(v) = queue.pop_front() {
        for &k in g.out_arcs(v) {
            let w = g.arcs[k].1;
            if live_arcs[k] && !seen[w] {
                seen[w] = true;
                tree_arc[w] = Some(k);
                queue.push_back(w);
            }
        }
    }
    // First live out-arc of each node leads towards `t`.
    let toward_t: Vec<Option<usize>> =
        (0..g.num_nodes).map(|v| g.out_arcs(v).iter().copied().find(|&k| live_arcs[k])).collect();

    let tree_path = |mut v: usize| {
        let mut arcs = Vec::new();
        while let Some(k) = tree_arc[v] {
            arcs.push(k);
            v = g.arcs[k].0;
        }
        arcs.reverse();
        arcs
    };
    let mut non_tree = Vec::new();
    let mut arc_paths = vec![tree_path(g.t)];
    for k in 0..g.arcs.len() {
        if !live_arcs[k] || tree_arc[g.arcs[k].1] == Some(k) {
            continue;
        }
        let (v, w) = g.arcs[k];
        let mut arcs = tree_path(v);
        arcs.push(k);
        let mut at = w;
        while at != g.t {
            let next = toward_t[at].ok_or_else(|| structural("live node without a live out-arc"))?;
            arcs.push(next);
            at = g.arcs[next].1;
        }
        non_tree.push(k);
        arc_paths.push(arcs);
    }
    let rows: Vec<Vec<Rational>> = arc_paths.iter().map(|a| arc_incidence(g, &live_arcs, a)).collect();
    let r = lp::rank(&rows);
    if r != arc_paths.len() {
        return Err(structural(format!("basis paths have rank {r}, expected {}", arc_paths.len())));
    }
    let paths = arc_paths.iter().map(|a| g.path_from_arcs(a)).collect::<Result<Vec<_>>>()?;
    Ok(PathBasis { live_nodes, live_arcs, tree_arc, non_tree, paths, arc_paths })
}

/// Arc weights `μ′` solving the linear system, the potential `φ`, and the
/// shifted nonnegative weights `μ` over all digraph elements.
#[derive(Debug, Clone)]
pub struct PotentialShift {
    pub basis: PathBasis,
    /// Indexed by arc; zero on arcs off every `s`-`t` path.
    pub mu_prime: Vec<Rational>,
    /// Indexed by node; `None` off every `s`-`t` path.
    pub phi: Vec<Option<Rational>>,
    /// Indexed by element: nodes carry 0, arcs their shifted weight.
    pub mu: Vec<Rational>,
    pub validated_paths: usize,
    pub exhaustive: bool,
}

impl PotentialShift {
    pub fn affine(&self) -> Result<AffineRequirement> {
        AffineRequirement::new(self.mu.clone())
    }
}

fn violation(path: OrderedPath, reason: impl Into<String>) -> Error {
    Error::ConservationViolation { witness: vec![path], reason: reason.into() }
}

fn random_path(g: &Digraph, live_arcs: &[bool], rng: &mut ChaCha8Rng) -> Result<OrderedPath> {
    let mut arcs = Vec::new();
    let mut at = g.s;
    while at != g.t {
        let out: Vec<usize> = g.out_arcs(at).iter().copied().filter(|&k| live_arcs[k]).collect();
        let k = out[rng.gen_range(0..out.len())];
        arcs.push(k);
        at = g.arcs[k].1;
    }
    g.path_from_arcs(&arcs)
}

/// Finds `μ ≥ 0` on the arcs of an acyclic digraph system with
/// `π_P = 1 − Σ_{e∈P} μ_e`, given `π` only as a value oracle.
///
/// The fit uses the basis paths alone, so a table that breaks the
/// conservation law is caught afterwards: by a negative weight, or by a
/// mismatch on some validated path.
pub fn compute_mu(system: &SetSystem, pi: &RequirementTable) -> Result<PotentialShift> {
    let g = system.as_digraph().ok_or_else(|| precondition("affine reduction needs a digraph system"))?;
    let order = g.topological_order().ok_or_else(|| structural("digraph has a cycle"))?;
    let basis = path_basis(g)?;
    let live_ids: Vec<usize> = (0..g.arcs.len()).filter(|&k| basis.live_arcs[k]).collect();

    let a: Vec<Vec<Rational>> = basis.arc_paths.iter().map(|p| arc_incidence(g, &basis.live_arcs, p)).collect();
    let b = basis.paths.iter().map(|p| pi.value(p).map(|v| -v)).collect::<Result<Vec<_>>>()?;
    let particular = match lp::solve_linear_system(&a, &b)? {
        LinearSystemSolution::Consistent { particular, .. } => particular,
        LinearSystemSolution::Inconsistent { .. } => {
            return Err(structural("independent basis rows gave an inconsistent system"))
        }
    };
    let mut mu_prime = vec![Rational::zero(); g.arcs.len()];
    for (x, &k) in particular.into_iter().zip(&live_ids) {
        mu_prime[k] = x;
    }

    let mut phi: Vec<Option<Rational>> = vec![None; g.num_nodes];
    phi[g.s] = Some(Rational::zero());
    for &v in &order {
        let Some(pv) = phi[v].clone() else { continue };
        for &k in g.out_arcs(v) {
            let w = g.arcs[k].1;
            if !basis.live_arcs[k] || w == g.t {
                continue;
            }
            let cand = &pv + &mu_prime[k];
            if phi[w].as_ref().is_none_or(|p| cand < *p) {
                phi[w] = Some(cand);
            }
        }
    }
    phi[g.t] = Some(-Rational::one());

    let mut mu = vec![Rational::zero(); system.len()];
    for &k in &live_ids {
        let (v, w) = g.arcs[k];
        let (pv, pw) = (phi[v].as_ref().expect("live tail"), phi[w].as_ref().expect("live head"));
        if w != g.t {
            assert!(pw <= &(&mu_prime[k] + pv), "potential is not a shortest-path distance");
        }
        mu[g.arc_element(k)] = &mu_prime[k] + pv - pw;
    }

    let check = |p: &OrderedPath| -> Result<()> {
        let want = Rational::one() - pi.value(p)?;
        let got = p.cost(&mu);
        if got != want {
            return Err(violation(
                p.clone(),
                format!("weights sum to {} but 1 - pi is {}", rational::format(&got), rational::format(&want)),
            ));
        }
        Ok(())
    };
    for (&k, p) in live_ids.iter().map(|k| (k, &mu[g.arc_element(*k)])) {
        if p.is_negative() || p > &Rational::one() {
            let witness = basis
                .paths
                .iter()
                .find(|q| q.contains(g.arc_element(k)))
                .cloned()
                .unwrap_or_else(|| basis.paths[0].clone());
            return Err(violation(witness, format!("arc weight {} outside [0,1]", rational::format(p))));
        }
    }
    let mut validated = 0;
    for p in &basis.paths {
        check(p)?;
        validated += 1;
    }
    let exhaustive = g.num_nodes <= EXHAUSTIVE_NODE_LIMIT;
    if exhaustive {
        for p in system.enumerate_members(ENUMERATION_LIMIT)? {
            check(&p)?;
            validated += 1;
        }
    } else {
        let mut rng = ChaCha8Rng::seed_from_u64(SAMPLE_SEED);
        for _ in 0..SAMPLED_PATHS {
            check(&random_path(g, &basis.live_arcs, &mut rng)?)?;
            validated += 1;
        }
    }
    Ok(PotentialShift { basis, mu_prime, phi, mu, validated_paths: validated, exhaustive })
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConservationVerdict {
    pub holds: bool,
    /// `(P, Q, e)` with `π_P + π_Q ≠ π_{P×_eQ} + π_{Q×_eP}`.
    pub witness: Option<(OrderedPath, OrderedPath, ElementId)>,
    pub triples_checked: usize,
}

/// Exhaustive check of the splice identity over all member pairs.
pub fn check_conservation(system: &SetSystem, pi: &RequirementTable) -> Result<ConservationVerdict> {
    let members = system.enumerate_members(ENUMERATION_LIMIT)?;
    let values = members.iter().map(|p| pi.value(p)).collect::<Result<Vec<_>>>()?;
    let mut checked = 0;
    for i in 0..members.len() {
        for j in i + 1..members.len() {
            let (p, q) = (&members[i], &members[j]);
            for &e in p.elements() {
                if !q.contains(e) {
                    continue;
                }
                checked += 1;
                let r1 = system.cross(p, q, e)?;
                let r2 = system.cross(q, p, e)?;
                if &values[i] + &values[j] != pi.value(&r1)? + pi.value(&r2)? {
                    return Ok(ConservationVerdict {
                        holds: false,
                        witness: Some((p.clone(), q.clone(), e)),
                        triples_checked: checked,
                    });
                }
            }
        }
    }
    Ok(ConservationVerdict { holds: true, witness: None, triples_checked: checked })
}

/// The system `Σ_{e∈P} μ_e = 1 − π_P` over ground elements only, one row per
/// member. For posets this can be inconsistent even when the law holds.
pub fn affine_on_ground(system: &SetSystem, pi: &RequirementTable) -> Result<LinearSystemSolution> {
    let members = system.enumerate_members(ENUMERATION_LIMIT)?;
    let n = system.len();
    let a: Vec<Vec<Rational>> = members
        .iter()
        .map(|p| (0..n).map(|e| if p.contains(e) { Rational::one() } else { Rational::zero() }).collect())
        .collect();
    let b = members.iter().map(|p| pi.value(p).map(|v| Rational::one() - v)).collect::<Result<Vec<_>>>()?;
    lp::solve_linear_system(&a, &b)
}

#[derive(Debug, Clone)]
pub struct PosetDecomposition {
    pub hasse: HasseDag,
    pub shift: PotentialShift,
    /// The run on the diagram, with arcs and virtual nodes at marginal 0.
    pub lifted: AffineDecomposition,
    pub decomposition: Decomposition,
}

/// Decomposes poset marginals for a chain requirement obeying the
/// conservation law, through the Hasse diagram.
pub fn decompose_poset_marginals(
    system: &SetSystem,
    pi: &RequirementTable,
    rho: &Marginals,
) -> Result<PosetDecomposition> {
    let hasse = hasse_diagram(system)?;
    let lifted_pi = hasse.lift_requirement(pi);
    let shift = compute_mu(&hasse.system, &lifted_pi)?;
    let mu = shift.affine()?;
    let rho_d = hasse.lift_marginals(rho)?;
    let lifted = match decomp::decompose_affine(&hasse.system, &rho_d, &mu, LabelRoute::Digraph) {
        Err(Error::InfeasibleMarginals { witness, covered, required }) => {
            return Err(Error::InfeasibleMarginals { witness: hasse.chain_of(&witness)?, covered, required })
        }
        other => other?,
    };
    let projected = lifted
        .decomposition
        .support()
        .iter()
        .map(|(set, p)| {
            let ids = set
                .iter()
                .map(|&v| hasse.element_of_node.get(v).copied().flatten())
                .collect::<Option<Vec<_>>>()
                .ok_or_else(|| structural("support set uses an element of marginal 0"))?;
            Ok((ids, p.clone()))
        })
        .collect::<Result<Vec<_>>>()?;
    let decomposition = Decomposition::from_weighted(projected)?;
    Ok(PosetDecomposition { hasse, shift, lifted, decomposition })
}
