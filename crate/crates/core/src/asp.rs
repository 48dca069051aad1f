//! Shortest paths in abstract networks, using nothing but a membership oracle.

use std::cell::Cell;

use num_traits::{Signed, Zero};

use crate::error::{precondition, structural, Result};
use crate::rational::Rational;
use crate::system::{Backend, ElementId, ElementSet, OrderedPath, SetSystem, ENUMERATION_LIMIT};

/// Anything that can answer "is there a member inside this set?".
pub trait MembershipOracle {
    fn ground_size(&self) -> usize;

    fn find_member(&self, allowed: &ElementSet) -> Result<Option<OrderedPath>>;

    /// Every member, when the family is small enough to list.
    fn enumerate(&self, _limit: usize) -> Option<Result<Vec<OrderedPath>>> {
        None
    }
}

impl MembershipOracle for SetSystem {
    fn ground_size(&self) -> usize {
        self.len()
    }

    fn find_member(&self, allowed: &ElementSet) -> Result<Option<OrderedPath>> {
        SetSystem::find_member(self, allowed)
    }

    fn enumerate(&self, limit: usize) -> Option<Result<Vec<OrderedPath>>> {
        Some(self.enumerate_members(limit))
    }
}

/// Wraps an oracle with dummy first/last elements placed after the real ground set.
struct WithEndpoints<'a, O: MembershipOracle + ?Sized> {
    inner: &'a O,
    n: usize,
    s: Option<ElementId>,
    t: Option<ElementId>,
}

impl<'a, O: MembershipOracle + ?Sized> WithEndpoints<'a, O> {
    fn new(inner: &'a O, add_s: bool, add_t: bool) -> Self {
        let n = inner.ground_size();
        let s = add_s.then_some(n);
        let t = add_t.then_some(n + usize::from(add_s));
        WithEndpoints { inner, n, s, t }
    }

    fn wrap(&self, p: &OrderedPath) -> OrderedPath {
        let mut v = Vec::with_capacity(p.len() + 2);
        v.extend(self.s);
        v.extend_from_slice(p.elements());
        v.extend(self.t);
        OrderedPath::new(v).expect("dummy endpoints are fresh")
    }

    fn strip(&self, p: &OrderedPath) -> OrderedPath {
        let v: Vec<ElementId> = p.elements().iter().copied().filter(|&e| e < self.n).collect();
        OrderedPath::new(v).expect("members are nonempty")
    }
}

impl<O: MembershipOracle + ?Sized> MembershipOracle for WithEndpoints<'_, O> {
    fn ground_size(&self) -> usize {
        self.n + usize::from(self.s.is_some()) + usize::from(self.t.is_some())
    }

    fn find_member(&self, allowed: &ElementSet) -> Result<Option<OrderedPath>> {
        if self.s.is_some_and(|s| !allowed.contains(s)) || self.t.is_some_and(|t| !allowed.contains(t)) {
            return Ok(None);
        }
        let inner = ElementSet::from_ids(self.n, allowed.iter().filter(|&e| e < self.n));
        Ok(self.inner.find_member(&inner)?.map(|p| self.wrap(&p)))
    }

    fn enumerate(&self, limit: usize) -> Option<Result<Vec<OrderedPath>>> {
        self.inner.enumerate(limit).map(|r| r.map(|ps| ps.iter().map(|p| self.wrap(p)).collect()))
    }
}

/// Counts oracle calls made through it.
struct Counting<'a, O: MembershipOracle + ?Sized> {
    inner: &'a O,
    calls: Cell<usize>,
}

impl<O: MembershipOracle + ?Sized> Counting<'_, O> {
    fn find(&self, allowed: &ElementSet) -> Result<Option<OrderedPath>> {
        self.calls.set(self.calls.get() + 1);
        self.inner.find_member(allowed)
    }
}

#[derive(Debug, Clone, Default)]
pub struct AspOptions {
    /// Check the label invariant after every outer iteration by enumeration.
    /// `None` enables it in debug builds for explicit systems of at most 12 elements.
    pub check_invariant: Option<bool>,
    pub record_trace: bool,
}

/// Label state of the search, indexed by (possibly augmented) element id.
#[derive(Debug, Clone)]
pub struct LabelState {
    pub psi: Vec<Option<Rational>>,
    pub witness: Vec<Option<OrderedPath>>,
    pub processed: ElementSet,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LabelUpdate {
    pub element: Option<ElementId>,
    pub psi: Rational,
}

/// One outer iteration. `None` element ids denote dummy endpoints.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TraceStep {
    pub processed: Option<ElementId>,
    pub psi: Rational,
    pub oracle_calls: usize,
    pub updates: Vec<LabelUpdate>,
}

#[derive(Debug, Clone)]
pub struct AspOutcome {
    /// Optimal member (with dummies stripped) and its cost.
    pub best: Option<(OrderedPath, Rational)>,
    pub oracle_calls: usize,
    /// Size of the ground set the search ran on, dummies included.
    pub augmented_size: usize,
    /// `ψ` of each processed element, in processing order.
    pub processing_order: Vec<(Option<ElementId>, Rational)>,
    pub trace: Vec<TraceStep>,
    pub invariant_checks: usize,
}

fn validate_costs(n: usize, gamma: &[Rational]) -> Result<()> {
    if gamma.len() != n {
        return Err(precondition(format!("cost vector has length {}, expected {n}", gamma.len())));
    }
    if let Some(i) = gamma.iter().position(|g| g.is_negative()) {
        return Err(precondition(format!("negative cost on element {i}")));
    }
    Ok(())
}

/// A minimum-cost member of the system under `gamma ≥ 0`, or `None` if there is none.
pub fn shortest_path(system: &SetSystem, gamma: &[Rational]) -> Result<Option<(OrderedPath, Rational)>> {
    Ok(shortest_path_detailed(system, gamma, &AspOptions::default())?.best)
}

pub fn shortest_path_detailed(system: &SetSystem, gamma: &[Rational], options: &AspOptions) -> Result<AspOutcome> {
    if let Some(v) = system.axiom_violation() {
        return Err(precondition(format!(
            "explicit members {} and {} do not splice at {:?}; not an abstract network",
            v.p,
            v.q,
            system.label(v.e)
        )));
    }
    let check_default =
        cfg!(debug_assertions) && matches!(system.backend(), Backend::Explicit(_)) && system.len() <= 12;
    let mut options = options.clone();
    options.check_invariant = Some(options.check_invariant.unwrap_or(check_default));
    let (s, t) = system.common_endpoints();
    shortest_path_with_oracle(system, gamma, s, t, &options)
}

/// Runs the search over any oracle. Missing common endpoints are supplied as dummies of cost 0.
pub fn shortest_path_with_oracle<O: MembershipOracle + ?Sized>(
    oracle: &O,
    gamma: &[Rational],
    s: Option<ElementId>,
    t: Option<ElementId>,
    options: &AspOptions,
) -> Result<AspOutcome> {
    let n = oracle.ground_size();
    validate_costs(n, gamma)?;
    let wrapped = WithEndpoints::new(oracle, s.is_none(), t.is_none());
    let s = s.or(wrapped.s).expect("source present");
    let t = t.or(wrapped.t).expect("sink present");
    let mut g = gamma.to_vec();
    g.resize(wrapped.ground_size(), Rational::zero());
    let mut out = run(&wrapped, &g, s, t, options)?;
    out.best = out.best.map(|(p, c)| (wrapped.strip(&p), c));
    let visible = |e: ElementId| (e < n).then_some(e);
    for step in &mut out.trace {
        // Internal ids were augmented; hide the dummies.
        step.processed = step.processed.and_then(visible);
        for u in &mut step.updates {
            u.element = u.element.and_then(visible);
        }
    }
    for (e, _) in &mut out.processing_order {
        *e = e.and_then(visible);
    }
    Ok(out)
}

fn run<O: MembershipOracle + ?Sized>(
    oracle: &O,
    gamma: &[Rational],
    s: ElementId,
    t: ElementId,
    options: &AspOptions,
) -> Result<AspOutcome> {
    let n = oracle.ground_size();
    let counting = Counting { inner: oracle, calls: Cell::new(0) };
    let mut outcome = AspOutcome {
        best: None,
        oracle_calls: 0,
        augmented_size: n,
        processing_order: Vec::new(),
        trace: Vec::new(),
        invariant_checks: 0,
    };
    let Some(q_s) = counting.find(&ElementSet::full(n))? else {
        outcome.oracle_calls = counting.calls.get();
        return Ok(outcome);
    };
    let members = if options.check_invariant == Some(true) {
        match oracle.enumerate(ENUMERATION_LIMIT) {
            Some(r) => Some(r?),
            None => None,
        }
    } else {
        None
    };

    let mut state = LabelState { psi: vec![None; n], witness: vec![None; n], processed: ElementSet::empty(n) };
    state.psi[s] = Some(gamma[s].clone());
    state.witness[s] = Some(q_s);

    if let Some(ms) = &members {
        check_invariant(&state, ms, gamma)?;
        outcome.invariant_checks += 1;
    }

    loop {
        let mut argmin: Option<ElementId> = None;
        for f in 0..n {
            if state.processed.contains(f) {
                continue;
            }
            if let Some(pf) = &state.psi[f] {
                if argmin.is_none_or(|a| pf < state.psi[a].as_ref().expect("finite")) {
                    argmin = Some(f);
                }
            }
        }
        let Some(e) = argmin else { break };
        let psi_e = state.psi[e].clone().expect("finite");
        match &state.psi[t] {
            Some(pt) if *pt <= psi_e => break,
            _ => {}
        }
        let calls_before = counting.calls.get();
        let q_e = state.witness[e].clone().expect("finite label has a witness");
        let head = q_e.prefix(e).to_vec();
        let head_set = ElementSet::from_ids(n, head.iter().copied());
        let mut f_set = ElementSet::empty(n);
        for x in 0..n {
            if !state.processed.contains(x) || head_set.contains(x) {
                f_set.insert(x);
            }
        }
        let mut updates = Vec::new();
        while let Some(p) = counting.find(&f_set)? {
            let Some(&e2) = p.elements().iter().find(|&&x| !head_set.contains(x)) else {
                return Err(structural("oracle returned a member inside a processed prefix"));
            };
            f_set.remove(e2);
            let c = p.cost_of_prefix(e2, gamma);
            if state.psi[e2].as_ref().is_none_or(|old| c < *old) {
                state.psi[e2] = Some(c.clone());
                state.witness[e2] = Some(p);
                if options.record_trace {
                    updates.push(LabelUpdate { element: Some(e2), psi: c });
                }
            }
        }
        state.processed.insert(e);
        outcome.processing_order.push((Some(e), psi_e.clone()));
        if options.record_trace {
            outcome.trace.push(TraceStep {
                processed: Some(e),
                psi: psi_e,
                oracle_calls: counting.calls.get() - calls_before,
                updates,
            });
        }
        if let Some(ms) = &members {
            check_invariant(&state, ms, gamma)?;
            outcome.invariant_checks += 1;
        }
    }

    outcome.oracle_calls = counting.calls.get();
    if let (Some(c), Some(q)) = (&state.psi[t], &state.witness[t]) {
        debug_assert_eq!(q.cost(gamma), *c);
        outcome.best = Some((q.clone(), c.clone()));
    }
    Ok(outcome)
}

/// Every member keeps an unprocessed suffix whose head is labeled no worse than its own prefix cost.
fn check_invariant(state: &LabelState, members: &[OrderedPath], gamma: &[Rational]) -> Result<()> {
    for p in members {
        let ok = p.elements().iter().enumerate().any(|(i, &e)| {
            p.elements()[i..].iter().all(|&x| !state.processed.contains(x))
                && state.psi[e].as_ref().is_some_and(|psi| *psi <= p.cost_of_prefix(e, gamma))
        });
        if !ok {
            return Err(structural(format!("shortest-path label invariant fails on member {:?}", p.elements())));
        }
    }
    Ok(())
}

/// Minimum-cost member of any system: the label search on abstract networks,
/// a scan of the list for explicit families that are not.
pub fn min_cost_member(system: &SetSystem, gamma: &[Rational]) -> Result<Option<(OrderedPath, Rational)>> {
    match system.backend() {
        Backend::Explicit(paths) if !system.is_abstract_network() => {
            validate_costs(system.len(), gamma)?;
            let mut best: Option<(OrderedPath, Rational)> = None;
            for p in paths {
                let c = p.cost(gamma);
                if best.as_ref().is_none_or(|(_, b)| c < *b) {
                    best = Some((p.clone(), c));
                }
            }
            Ok(best)
        }
        _ => shortest_path(system, gamma),
    }
}

/// Minimizes `Σ_{f ∈ P ∩ U} weights_f` over members `P`.
pub fn restricted_shortest_path(
    system: &SetSystem,
    active: &ElementSet,
    weights: &[Rational],
) -> Result<Option<(OrderedPath, Rational)>> {
    if weights.len() != system.len() || active.universe_size() != system.len() {
        return Err(precondition("weights or active set do not match the ground set"));
    }
    let gamma: Vec<Rational> =
        (0..system.len()).map(|e| if active.contains(e) { weights[e].clone() } else { Rational::zero() }).collect();
    shortest_path(system, &gamma)
}
