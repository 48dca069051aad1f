//! Ground sets, ordered paths and the set-system backends.

use std::collections::{HashMap, HashSet, VecDeque};
use std::fmt;
use std::sync::{Arc, OnceLock};

use num_traits::{One, Signed, Zero};
use serde::{Deserialize, Serialize};

use crate::asp;
use crate::error::{precondition, structural, Error, Result};
use crate::rational::{self, Rational};

/// Default cap on how many members may be materialized by enumeration.
pub const ENUMERATION_LIMIT: usize = 100_000;

pub type ElementId = usize;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Element {
    pub id: ElementId,
    pub label: String,
}

/// Subset of a ground set `0..n`, stored as a membership mask.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct ElementSet {
    mask: Vec<bool>,
}

impl ElementSet {
    pub fn empty(n: usize) -> Self {
        ElementSet { mask: vec![false; n] }
    }

    pub fn full(n: usize) -> Self {
        ElementSet { mask: vec![true; n] }
    }

    pub fn from_ids(n: usize, ids: impl IntoIterator<Item = ElementId>) -> Self {
        let mut set = Self::empty(n);
        for id in ids {
            set.insert(id);
        }
        set
    }

    pub fn universe_size(&self) -> usize {
        self.mask.len()
    }

    pub fn contains(&self, id: ElementId) -> bool {
        self.mask.get(id).copied().unwrap_or(false)
    }

    pub fn insert(&mut self, id: ElementId) {
        self.mask[id] = true;
    }

    pub fn remove(&mut self, id: ElementId) {
        if id < self.mask.len() {
            self.mask[id] = false;
        }
    }

    pub fn len(&self) -> usize {
        self.mask.iter().filter(|b| **b).count()
    }

    pub fn is_empty(&self) -> bool {
        !self.mask.iter().any(|b| *b)
    }

    pub fn iter(&self) -> impl Iterator<Item = ElementId> + '_ {
        self.mask.iter().enumerate().filter(|(_, b)| **b).map(|(i, _)| i)
    }

    pub fn contains_all(&self, ids: &[ElementId]) -> bool {
        ids.iter().all(|&id| self.contains(id))
    }
}

impl fmt::Debug for ElementSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_set().entries(self.iter()).finish()
    }
}

/// A member of the path family together with its internal linear order.
#[derive(Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct OrderedPath {
    elements: Vec<ElementId>,
}

impl OrderedPath {
    pub fn new(elements: Vec<ElementId>) -> Result<Self> {
        if elements.is_empty() {
            return Err(structural("paths must be nonempty"));
        }
        let mut seen = HashSet::with_capacity(elements.len());
        for &e in &elements {
            if !seen.insert(e) {
                return Err(structural(format!("element {e} repeated in path")));
            }
        }
        Ok(OrderedPath { elements })
    }

    pub fn elements(&self) -> &[ElementId] {
        &self.elements
    }

    pub fn len(&self) -> usize {
        self.elements.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn first(&self) -> ElementId {
        self.elements[0]
    }

    pub fn last(&self) -> ElementId {
        *self.elements.last().expect("nonempty")
    }

    pub fn position(&self, e: ElementId) -> Option<usize> {
        self.elements.iter().position(|&x| x == e)
    }

    pub fn contains(&self, e: ElementId) -> bool {
        self.elements.contains(&e)
    }

    fn pos_or_panic(&self, e: ElementId) -> usize {
        self.position(e).unwrap_or_else(|| panic!("element {e} not on path {:?}", self.elements))
    }

    /// `[P, e]`: everything up to and including `e`.
    pub fn prefix(&self, e: ElementId) -> &[ElementId] {
        &self.elements[..=self.pos_or_panic(e)]
    }

    /// `(P, e)`: everything strictly before `e`.
    pub fn strict_prefix(&self, e: ElementId) -> &[ElementId] {
        &self.elements[..self.pos_or_panic(e)]
    }

    /// `[e, P]`: `e` and everything after it.
    pub fn suffix(&self, e: ElementId) -> &[ElementId] {
        &self.elements[self.pos_or_panic(e)..]
    }

    /// `(e, P)`: everything strictly after `e`.
    pub fn strict_suffix(&self, e: ElementId) -> &[ElementId] {
        &self.elements[self.pos_or_panic(e) + 1..]
    }

    /// Element ids in ascending order.
    pub fn sorted_ids(&self) -> Vec<ElementId> {
        let mut v = self.elements.clone();
        v.sort_unstable();
        v
    }

    pub fn cost(&self, weights: &[Rational]) -> Rational {
        sum_over(&self.elements, weights)
    }

    /// Cost of `[P, e]`; `e` must lie on the path.
    pub fn cost_of_prefix(&self, e: ElementId, weights: &[Rational]) -> Rational {
        sum_over(self.prefix(e), weights)
    }

    pub fn to_set(&self, n: usize) -> ElementSet {
        ElementSet::from_ids(n, self.elements.iter().copied())
    }

    pub fn intersects(&self, ids: &[ElementId]) -> bool {
        self.elements.iter().any(|e| ids.binary_search(e).is_ok())
    }
}

impl fmt::Debug for OrderedPath {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:?}", self.elements)
    }
}

pub(crate) fn sum_over(ids: &[ElementId], weights: &[Rational]) -> Rational {
    ids.iter().fold(Rational::zero(), |acc, &e| acc + &weights[e])
}

#[derive(Debug, Clone)]
pub struct Digraph {
    pub num_nodes: usize,
    /// `(tail, head)` node indices; arc `k` is element `num_nodes + k`.
    pub arcs: Vec<(usize, usize)>,
    pub s: usize,
    pub t: usize,
    out: Vec<Vec<usize>>,
}

impl Digraph {
    pub fn new(num_nodes: usize, arcs: Vec<(usize, usize)>, s: usize, t: usize) -> Result<Self> {
        if s >= num_nodes || t >= num_nodes {
            return Err(structural("source or sink out of range"));
        }
        if s == t {
            return Err(structural("digraph source and sink must differ"));
        }
        let mut out = vec![Vec::new(); num_nodes];
        for (k, &(v, w)) in arcs.iter().enumerate() {
            if v >= num_nodes || w >= num_nodes {
                return Err(structural(format!("arc {k} has an endpoint out of range")));
            }
            out[v].push(k);
        }
        Ok(Digraph { num_nodes, arcs, s, t, out })
    }

    pub fn arc_element(&self, k: usize) -> ElementId {
        self.num_nodes + k
    }

    pub fn element_count(&self) -> usize {
        self.num_nodes + self.arcs.len()
    }

    pub fn is_arc(&self, e: ElementId) -> bool {
        e >= self.num_nodes
    }

    /// Outgoing arc indices of `v`, ascending.
    pub fn out_arcs(&self, v: usize) -> &[usize] {
        &self.out[v]
    }

    /// Builds the alternating node/arc sequence for a node path given by its arcs.
    pub fn path_from_arcs(&self, arcs: &[usize]) -> Result<OrderedPath> {
        let mut elements = vec![self.s];
        let mut at = self.s;
        for &k in arcs {
            let (v, w) = self.arcs[k];
            if v != at {
                return Err(structural("arc sequence is not contiguous"));
            }
            elements.push(self.arc_element(k));
            elements.push(w);
            at = w;
        }
        OrderedPath::new(elements)
    }

    /// Topological order of the nodes, or `None` when the digraph has a cycle.
    pub fn topological_order(&self) -> Option<Vec<usize>> {
        let mut indeg = vec![0usize; self.num_nodes];
        for &(_, w) in &self.arcs {
            indeg[w] += 1;
        }
        let mut queue: VecDeque<usize> = (0..self.num_nodes).filter(|&v| indeg[v] == 0).collect();
        let mut order = Vec::with_capacity(self.num_nodes);
        while let Some(v) = queue.pop_front() {
            order.push(v);
            for &k in &self.out[v] {
                let w = self.arcs[k].1;
                indeg[w] -= 1;
                if indeg[w] == 0 {
                    queue.push_back(w);
                }
            }
        }
        (order.len() == self.num_nodes).then_some(order)
    }
}

#[derive(Debug, Clone)]
pub struct Poset {
    /// Covering pairs `(x, y)` with `x ⋖ y`, sorted.
    pub covers: Vec<(usize, usize)>,
    up: Vec<Vec<usize>>,
    pub minimal: Vec<usize>,
    pub maximal: Vec<usize>,
}

impl Poset {
    /// Accepts any acyclic relation and keeps only its covering pairs.
    pub fn new(n: usize, relation: &[(usize, usize)]) -> Result<Self> {
        let mut less = vec![vec![false; n]; n];
        for &(x, y) in relation {
            if x >= n || y >= n {
                return Err(structural("order pair out of range"));
            }
            if x == y {
                return Err(structural(format!("relation is reflexive at element {x}")));
            }
            less[x][y] = true;
        }
        // Warshall closure.
        for k in 0..n {
            for i in 0..n {
                if less[i][k] {
                    for j in 0..n {
                        if less[k][j] {
                            less[i][j] = true;
                        }
                    }
                }
            }
        }
        if (0..n).any(|i| less[i][i]) {
            return Err(structural("order relation is cyclic"));
        }
        let mut covers = Vec::new();
        for x in 0..n {
            for y in 0..n {
                if less[x][y] && !(0..n).any(|z| less[x][z] && less[z][y]) {
                    covers.push((x, y));
                }
            }
        }
        let mut up = vec![Vec::new(); n];
        let mut has_lower = vec![false; n];
        for &(x, y) in &covers {
            up[x].push(y);
            has_lower[y] = true;
        }
        let minimal = (0..n).filter(|&v| !has_lower[v]).collect();
        let maximal = (0..n).filter(|&v| up[v].is_empty()).collect();
        Ok(Poset { covers, up, minimal, maximal })
    }

    pub fn upper_covers(&self, v: usize) -> &[usize] {
        &self.up[v]
    }

    pub fn is_maximal(&self, v: usize) -> bool {
        self.up[v].is_empty()
    }
}

#[derive(Debug, Clone)]
pub enum Backend {
    Explicit(Vec<OrderedPath>),
    Digraph(Digraph),
    Poset(Poset),
}

/// A path family `𝒫` over a labeled ground set, accessed through a membership oracle.
#[derive(Debug, Clone)]
pub struct SetSystem {
    ground: Vec<Element>,
    backend: Backend,
    index: HashMap<String, ElementId>,
    axiom: OnceLock<Option<AxiomViolation>>,
}

/// Members `P`, `Q` (by index) and a shared `e` with no member inside `[P,e] ∪ [e,Q]`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct AxiomViolation {
    pub p: usize,
    pub q: usize,
    pub e: ElementId,
}

fn build_index(labels: &[String]) -> Result<HashMap<String, ElementId>> {
    let mut index = HashMap::with_capacity(labels.len());
    for (i, l) in labels.iter().enumerate() {
        if index.insert(l.clone(), i).is_some() {
            return Err(structural(format!("duplicate element label {l:?}")));
        }
    }
    Ok(index)
}

fn make_ground(labels: Vec<String>) -> Vec<Element> {
    labels.into_iter().enumerate().map(|(id, label)| Element { id, label }).collect()
}

impl SetSystem {
    pub fn explicit(labels: Vec<String>, paths: Vec<Vec<ElementId>>) -> Result<Self> {
        let index = build_index(&labels)?;
        let n = labels.len();
        let mut members = Vec::with_capacity(paths.len());
        for p in paths {
            if let Some(&bad) = p.iter().find(|&&e| e >= n) {
                return Err(structural(format!("path element {bad} outside ground set")));
            }
            members.push(OrderedPath::new(p)?);
        }
        Ok(SetSystem {
            ground: make_ground(labels),
            backend: Backend::Explicit(members),
            index,
            axiom: OnceLock::new(),
        })
    }

    /// Digraph whose elements are its nodes followed by its arcs. Arc labels
    /// default to `"v->w"`, with `#k` appended for parallel copies.
    pub fn digraph(
        node_labels: Vec<String>,
        arcs: Vec<(usize, usize)>,
        s: usize,
        t: usize,
        arc_labels: Option<Vec<String>>,
    ) -> Result<Self> {
        let n = node_labels.len();
        let graph = Digraph::new(n, arcs, s, t)?;
        let arc_labels = match arc_labels {
            Some(l) if l.len() == graph.arcs.len() => l,
            Some(_) => return Err(structural("arc label count does not match arc count")),
            None => {
                let mut seen: HashMap<(usize, usize), usize> = HashMap::new();
                graph
                    .arcs
                    .iter()
                    .map(|&(v, w)| {
                        let k = seen.entry((v, w)).or_insert(0);
                        *k += 1;
                        let base = format!("{}->{}", node_labels[v], node_labels[w]);
                        if *k == 1 {
                            base
                        } else {
                            format!("{base}#{k}")
                        }
                    })
                    .collect()
            }
        };
        let mut labels = node_labels;
        labels.extend(arc_labels);
        let index = build_index(&labels)?;
        Ok(SetSystem { ground: make_ground(labels), backend: Backend::Digraph(graph), index, axiom: OnceLock::new() })
    }

    /// Maximal chains of the order generated by `relation` (pairs `x ≺ y`).
    pub fn poset(labels: Vec<String>, relation: &[(usize, usize)]) -> Result<Self> {
        let index = build_index(&labels)?;
        let poset = Poset::new(labels.len(), relation)?;
        Ok(SetSystem { ground: make_ground(labels), backend: Backend::Poset(poset), index, axiom: OnceLock::new() })
    }

    pub fn ground(&self) -> &[Element] {
        &self.ground
    }

    pub fn len(&self) -> usize {
        self.ground.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ground.is_empty()
    }

    pub fn backend(&self) -> &Backend {
        &self.backend
    }

    pub fn as_digraph(&self) -> Option<&Digraph> {
        match &self.backend {
            Backend::Digraph(g) => Some(g),
            _ => None,
        }
    }

    pub fn label(&self, id: ElementId) -> &str {
        &self.ground[id].label
    }

    pub fn id_of(&self, label: &str) -> Option<ElementId> {
        self.index.get(label).copied()
    }

    pub fn labels_of(&self, ids: &[ElementId]) -> Vec<String> {
        ids.iter().map(|&e| self.label(e).to_string()).collect()
    }

    /// Membership oracle: some member `P ⊆ allowed`, or `None`.
    ///
    /// Explicit systems return the first listed member that fits. Digraphs run a
    /// breadth-first search from `s` over allowed nodes and arcs, scanning arcs
    /// in ascending id order. Posets search the Hasse diagram from the allowed
    /// minimal elements to any maximal element.
    pub fn find_member(&self, allowed: &ElementSet) -> Result<Option<OrderedPath>> {
        if allowed.universe_size() != self.len() {
            return Err(precondition("allowed set has the wrong universe size"));
        }
        match &self.backend {
            Backend::Explicit(paths) => Ok(paths.iter().find(|p| allowed.contains_all(p.elements())).cloned()),
            Backend::Digraph(g) => digraph_bfs(g, allowed),
            Backend::Poset(p) => poset_bfs(p, allowed),
        }
    }

    /// `P ×_e Q`: a member inside `[P, e] ∪ [e, Q]`.
    pub fn cross(&self, p: &OrderedPath, q: &OrderedPath, e: ElementId) -> Result<OrderedPath> {
        if !p.contains(e) || !q.contains(e) {
            return Err(precondition(format!("element {e} is not on both paths")));
        }
        let mut union = ElementSet::empty(self.len());
        for &x in p.prefix(e).iter().chain(q.suffix(e)) {
            union.insert(x);
        }
        let r = self.find_member(&union)?.ok_or_else(|| {
            structural(format!("abstract-network axiom violated: no member inside [P,{e}] ∪ [{e},Q]"))
        })?;
        assert!(union.contains_all(r.elements()), "cross output escapes the splice union");
        Ok(r)
    }

    /// Materializes every member, failing once more than `limit` are found.
    pub fn enumerate_members(&self, limit: usize) -> Result<Vec<OrderedPath>> {
        let guard = |actual| Error::SizeGuard { what: "member count", actual, limit };
        match &self.backend {
            Backend::Explicit(paths) => {
                if paths.len() > limit {
                    return Err(guard(paths.len()));
                }
                Ok(paths.clone())
            }
            Backend::Digraph(g) => {
                let mut out = Vec::new();
                let mut on_path = vec![false; g.num_nodes];
                let mut arcs = Vec::new();
                on_path[g.s] = true;
                enumerate_digraph(g, g.s, &mut on_path, &mut arcs, &mut out, limit)?;
                Ok(out)
            }
            Backend::Poset(p) => {
                let mut out = Vec::new();
                for &m in &p.minimal {
                    let mut chain = vec![m];
                    enumerate_chains(p, &mut chain, &mut out, limit)?;
                }
                Ok(out)
            }
        }
    }

    /// Whether the member orders satisfy the splice axiom. Digraph and poset
    /// backends satisfy it by construction; explicit lists are checked once.
    pub fn is_abstract_network(&self) -> bool {
        self.axiom_violation().is_none()
    }

    pub fn axiom_violation(&self) -> Option<AxiomViolation> {
        *self.axiom.get_or_init(|| match &self.backend {
            Backend::Explicit(paths) => find_axiom_violation(self.len(), paths),
            _ => None,
        })
    }

    /// Elements shared as first / last by every member, when the backend knows them.
    pub fn common_endpoints(&self) -> (Option<ElementId>, Option<ElementId>) {
        match &self.backend {
            Backend::Explicit(paths) => {
                let Some(first) = paths.first() else { return (None, None) };
                let s = first.first();
                let t = first.last();
                let s = paths.iter().all(|p| p.first() == s).then_some(s);
                let t = paths.iter().all(|p| p.last() == t).then_some(t);
                (s, t)
            }
            Backend::Digraph(g) => (Some(g.s), Some(g.t)),
            Backend::Poset(p) => {
                let s = (p.minimal.len() == 1).then(|| p.minimal[0]);
                let t = (p.maximal.len() == 1).then(|| p.maximal[0]);
                (s, t)
            }
        }
    }
}

fn find_axiom_violation(n: usize, paths: &[OrderedPath]) -> Option<AxiomViolation> {
    let sets: Vec<ElementSet> = paths.iter().map(|p| p.to_set(n)).collect();
    for (i, p) in paths.iter().enumerate() {
        for (j, q) in paths.iter().enumerate() {
            for &e in p.elements() {
                if !sets[j].contains(e) {
                    continue;
                }
                let mut union = ElementSet::empty(n);
                for &x in p.prefix(e).iter().chain(q.suffix(e)) {
                    union.insert(x);
                }
                if !paths.iter().any(|r| union.contains_all(r.elements())) {
                    return Some(AxiomViolation { p: i, q: j, e });
                }
            }
        }
    }
    None
}

fn digraph_bfs(g: &Digraph, allowed: &ElementSet) -> Result<Option<OrderedPath>> {
    if !allowed.contains(g.s) || !allowed.contains(g.t) {
        return Ok(None);
    }
    let mut pred: Vec<Option<usize>> = vec![None; g.num_nodes];
    let mut seen = vec![false; g.num_nodes];
    seen[g.s] = true;
    let mut queue = VecDeque::from([g.s]);
    while let Some(v) = queue.pop_front() {
        if v == g.t {
            break;
        }
        for &k in g.out_arcs(v) {
            let w = g.arcs[k].1;
            if seen[w] || !allowed.contains(g.arc_element(k)) || !allowed.contains(w) {
                continue;
            }
            seen[w] = true;
            pred[w] = Some(k);
            queue.push_back(w);
        }
    }
    if !seen[g.t] {
        return Ok(None);
    }
    let mut arcs = Vec::new();
    let mut at = g.t;
    while let Some(k) = pred[at] {
        arcs.push(k);
        at = g.arcs[k].0;
    }
    arcs.reverse();
    g.path_from_arcs(&arcs).map(Some)
}

fn poset_bfs(p: &Poset, allowed: &ElementSet) -> Result<Option<OrderedPath>> {
    let n = p.up.len();
    let mut pred: Vec<Option<usize>> = vec![None; n];
    let mut seen = vec![false; n];
    let mut queue = VecDeque::new();
    for &m in &p.minimal {
        if allowed.contains(m) {
            seen[m] = true;
            queue.push_back(m);
        }
    }
    while let Some(v) = queue.pop_front() {
        if p.is_maximal(v) {
            let mut chain = vec![v];
            let mut at = v;
            while let Some(u) = pred[at] {
                chain.push(u);
                at = u;
            }
            chain.reverse();
            return OrderedPath::new(chain).map(Some);
        }
        for &w in p.upper_covers(v) {
            if !seen[w] && allowed.contains(w) {
                seen[w] = true;
                pred[w] = Some(v);
                queue.push_back(w);
            }
        }
    }
    Ok(None)
}

fn enumerate_digraph(
    g: &Digraph,
    v: usize,
    on_path: &mut [bool],
    arcs: &mut Vec<usize>,
    out: &mut Vec<OrderedPath>,
    limit: usize,
) -> Result<()> {
    if v == g.t {
        if out.len() == limit {
            return Err(Error::SizeGuard { what: "member count", actual: limit + 1, limit });
        }
        out.push(g.path_from_arcs(arcs)?);
        return Ok(());
    }
    for &k in g.out_arcs(v) {
        let w = g.arcs[k].1;
        if on_path[w] {
            continue;
        }
        on_path[w] = true;
        arcs.push(k);
        enumerate_digraph(g, w, on_path, arcs, out, limit)?;
        arcs.pop();
        on_path[w] = false;
    }
    Ok(())
}

fn enumerate_chains(p: &Poset, chain: &mut Vec<usize>, out: &mut Vec<OrderedPath>, limit: usize) -> Result<()> {
    let v = *chain.last().expect("nonempty chain");
    if p.is_maximal(v) {
        if out.len() == limit {
            return Err(Error::SizeGuard { what: "member count", actual: limit + 1, limit });
        }
        out.push(OrderedPath::new(chain.clone())?);
        return Ok(());
    }
    for &w in p.upper_covers(v) {
        chain.push(w);
        enumerate_chains(p, chain, out, limit)?;
        chain.pop();
    }
    Ok(())
}

/// Prescribed inclusion probabilities `ρ`, indexed by element id.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Marginals {
    rho: Vec<Rational>,
}

impl Marginals {
    pub fn new(rho: Vec<Rational>) -> Result<Self> {
        if let Some((e, r)) = rho.iter().enumerate().find(|(_, r)| !rational::in_unit_interval(r)) {
            return Err(precondition(format!("marginal of element {e} is {r}, outside [0,1]")));
        }
        Ok(Marginals { rho })
    }

    pub fn zeros(n: usize) -> Self {
        Marginals { rho: vec![Rational::zero(); n] }
    }

    pub fn as_slice(&self) -> &[Rational] {
        &self.rho
    }

    pub fn get(&self, e: ElementId) -> &Rational {
        &self.rho[e]
    }

    pub fn len(&self) -> usize {
        self.rho.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rho.is_empty()
    }

    pub fn into_vec(self) -> Vec<Rational> {
        self.rho
    }
}

/// Requirements of the form `π_P = 1 − Σ_{e∈P} μ_e`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AffineRequirement {
    mu: Vec<Rational>,
}

impl AffineRequirement {
    pub fn new(mu: Vec<Rational>) -> Result<Self> {
        if let Some((e, m)) = mu.iter().enumerate().find(|(_, m)| !rational::in_unit_interval(m)) {
            return Err(precondition(format!("mu of element {e} is {m}, outside [0,1]")));
        }
        Ok(AffineRequirement { mu })
    }

    pub fn zeros(n: usize) -> Self {
        AffineRequirement { mu: vec![Rational::zero(); n] }
    }

    pub fn as_slice(&self) -> &[Rational] {
        &self.mu
    }

    pub fn len(&self) -> usize {
        self.mu.len()
    }

    pub fn is_empty(&self) -> bool {
        self.mu.is_empty()
    }

    /// Unclamped: may be negative, making the covering constraint vacuous.
    pub fn pi(&self, path: &OrderedPath) -> Rational {
        Rational::one() - path.cost(&self.mu)
    }
}

pub type ValueOracle = Arc<dyn Fn(&OrderedPath) -> Result<Rational> + Send + Sync>;

/// Per-member requirements, listed or computed on demand.
#[derive(Clone)]
pub enum RequirementTable {
    /// Keyed by the member's element ids in ascending order.
    Explicit(HashMap<Vec<ElementId>, Rational>),
    Oracle(ValueOracle),
}

impl RequirementTable {
    pub fn from_entries(entries: impl IntoIterator<Item = (Vec<ElementId>, Rational)>) -> Result<Self> {
        let mut map = HashMap::new();
        for (mut ids, v) in entries {
            if !rational::in_unit_interval(&v) {
                return Err(precondition(format!("requirement {v} outside [0,1]")));
            }
            ids.sort_unstable();
            map.insert(ids, v);
        }
        Ok(RequirementTable::Explicit(map))
    }

    pub fn oracle(f: impl Fn(&OrderedPath) -> Result<Rational> + Send + Sync + 'static) -> Self {
        RequirementTable::Oracle(Arc::new(f))
    }

    pub fn value(&self, path: &OrderedPath) -> Result<Rational> {
        match self {
            RequirementTable::Explicit(map) => map
                .get(&path.sorted_ids())
                .cloned()
                .ok_or_else(|| precondition(format!("no requirement listed for path {path:?}"))),
            RequirementTable::Oracle(f) => f(path),
        }
    }
}

impl fmt::Debug for RequirementTable {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            RequirementTable::Explicit(map) => f.debug_tuple("Explicit").field(map).finish(),
            RequirementTable::Oracle(_) => f.write_str("Oracle(..)"),
        }
    }
}

#[derive(Debug, Clone)]
pub enum Requirement {
    Affine(AffineRequirement),
    Table(RequirementTable),
}

impl Requirement {
    pub fn value(&self, path: &OrderedPath) -> Result<Rational> {
        match self {
            Requirement::Affine(a) => Ok(a.pi(path)),
            Requirement::Table(t) => t.value(path),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StarVerdict {
    pub holds: bool,
    /// A violating member when `holds` is false.
    pub witness: Option<OrderedPath>,
    /// `min_P Σ_{e∈P} ρ_e − π_P` over the members inspected.
    pub min_slack: Option<Rational>,
}

/// Checks `Σ_{e∈P} ρ_e ≥ π_P` for every member.
///
/// Affine requirements need a single shortest-path call with weights `ρ + μ`;
/// tables need an enumerable system.
pub fn check_condition_star(system: &SetSystem, rho: &Marginals, req: &Requirement) -> Result<StarVerdict> {
    if rho.len() != system.len() {
        return Err(precondition("marginal vector length differs from ground set size"));
    }
    match req {
        Requirement::Affine(a) => {
            if a.len() != system.len() {
                return Err(precondition("mu vector length differs from ground set size"));
            }
            let weights: Vec<Rational> = rho.as_slice().iter().zip(a.as_slice()).map(|(r, m)| r + m).collect();
            match asp::min_cost_member(system, &weights)? {
                None => Ok(StarVerdict { holds: true, witness: None, min_slack: None }),
                Some((path, cost)) => {
                    let slack = cost - Rational::one();
                    let holds = !slack.is_negative();
                    Ok(StarVerdict { holds, witness: (!holds).then_some(path), min_slack: Some(slack) })
                }
            }
        }
        Requirement::Table(table) => {
            let members = system.enumerate_members(ENUMERATION_LIMIT).map_err(|e| match e {
                Error::SizeGuard { .. } => {
                    Error::Unsupported("requirement tables need an enumerable path family".into())
                }
                other => other,
            })?;
            let mut worst: Option<(Rational, OrderedPath)> = None;
            for p in members {
                let slack = p.cost(rho.as_slice()) - table.value(&p)?;
                if worst.as_ref().is_none_or(|(w, _)| slack < *w) {
                    worst = Some((slack, p));
                }
            }
            Ok(match worst {
                None => StarVerdict { holds: true, witness: None, min_slack: None },
                Some((slack, p)) => {
                    let holds = !slack.is_negative();
                    StarVerdict { holds, witness: (!holds).then_some(p), min_slack: Some(slack) }
                }
            })
        }
    }
}
