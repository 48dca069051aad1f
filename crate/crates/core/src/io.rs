//! JSON file formats. Rationals travel as `"p/q"` or integer strings;
//! elements are referred to by label.
//!
//! Instance:
//! `{"elements":[..], "system":{"type":"explicit","paths":[[..]]}, "rho":{label:"p/q"}, "mu":{..}}`
//! with `"pi":[{"path":[..],"value":".."}]` in place of `"mu"` for tables.
//! Digraph systems list `"arcs":[[v,w],..]`, `"source"`, `"sink"` and
//! optionally `"arcLabels"`; `"elements"` then names the nodes only. Poset
//! systems list `"covers":[[x,y],..]`. Labels missing from `rho`/`mu` are 0.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::decomp::Decomposition;
use crate::error::{Error, Result};
use crate::game::GameInstance;
use crate::rational::{self, Rational};
use crate::system::{
    AffineRequirement, Backend, ElementId, Marginals, OrderedPath, Requirement, RequirementTable, SetSystem,
    ENUMERATION_LIMIT,
};

fn parse_err(msg: impl Into<String>) -> Error {
    Error::Parse(msg.into())
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase")]
pub enum SystemSpec {
    Explicit {
        paths: Vec<Vec<String>>,
    },
    Digraph {
        arcs: Vec<(String, String)>,
        source: String,
        sink: String,
        #[serde(rename = "arcLabels", default, skip_serializing_if = "Option::is_none")]
        arc_labels: Option<Vec<String>>,
    },
    Poset {
        covers: Vec<(String, String)>,
    },
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RequirementEntry {
    pub path: Vec<String>,
    pub value: String,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct InstanceFile {
    pub elements: Vec<String>,
    pub system: SystemSpec,
    #[serde(default)]
    pub rho: BTreeMap<String, String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mu: Option<BTreeMap<String, String>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pi: Option<Vec<RequirementEntry>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub u: Option<BTreeMap<String, String>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub c: Option<BTreeMap<String, String>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub d: Option<BTreeMap<String, String>>,
}

#[derive(Debug, Clone)]
pub struct Instance {
    pub system: SetSystem,
    pub rho: Marginals,
    pub requirement: Requirement,
}

fn index_of(labels: &[String], label: &str) -> Result<usize> {
    labels.iter().position(|l| l == label).ok_or_else(|| parse_err(format!("unknown label {label:?}")))
}

pub fn build_system(elements: &[String], spec: &SystemSpec) -> Result<SetSystem> {
    match spec {
        SystemSpec::Explicit { paths } => {
            let ids = paths
                .iter()
                .map(|p| p.iter().map(|l| index_of(elements, l)).collect::<Result<Vec<_>>>())
                .collect::<Result<Vec<_>>>()?;
            SetSystem::explicit(elements.to_vec(), ids)
        }
        SystemSpec::Digraph { arcs, source, sink, arc_labels } => {
            let arcs = arcs
                .iter()
                .map(|(v, w)| Ok((index_of(elements, v)?, index_of(elements, w)?)))
                .collect::<Result<Vec<_>>>()?;
            let (s, t) = (index_of(elements, source)?, index_of(elements, sink)?);
            SetSystem::digraph(elements.to_vec(), arcs, s, t, arc_labels.clone())
        }
        SystemSpec::Poset { covers } => {
            let rel = covers
                .iter()
                .map(|(x, y)| Ok((index_of(elements, x)?, index_of(elements, y)?)))
                .collect::<Result<Vec<_>>>()?;
            SetSystem::poset(elements.to_vec(), &rel)
        }
    }
}

/// Inverse of `build_system`, for writing generated instances.
pub fn system_spec(system: &SetSystem) -> (Vec<String>, SystemSpec) {
    let labels: Vec<String> = system.ground().iter().map(|e| e.label.clone()).collect();
    match system.backend() {
        Backend::Explicit(paths) => {
            let paths = paths.iter().map(|p| system.labels_of(p.elements())).collect();
            (labels, SystemSpec::Explicit { paths })
        }
        Backend::Digraph(g) => {
            let nodes = labels[..g.num_nodes].to_vec();
            let arcs = g.arcs.iter().map(|&(v, w)| (nodes[v].clone(), nodes[w].clone())).collect();
            let arc_labels = Some(labels[g.num_nodes..].to_vec());
            let spec = SystemSpec::Digraph { arcs, source: nodes[g.s].clone(), sink: nodes[g.t].clone(), arc_labels };
            (nodes, spec)
        }
        Backend::Poset(p) => {
            let covers = p.covers.iter().map(|&(x, y)| (labels[x].clone(), labels[y].clone())).collect();
            (labels, SystemSpec::Poset { covers })
        }
    }
}

/// Dense vector from a label map; absent labels are 0.
pub fn vector_from_map(system: &SetSystem, map: &BTreeMap<String, String>) -> Result<Vec<Rational>> {
    let mut v = vec![rational::zero(); system.len()];
    for (label, value) in map {
        let id = system.id_of(label).ok_or_else(|| parse_err(format!("unknown label {label:?}")))?;
        v[id] = rational::parse(value)?;
    }
    Ok(v)
}

/// Sparse label map; zero entries are dropped.
pub fn map_from_vector(system: &SetSystem, v: &[Rational]) -> BTreeMap<String, String> {
    v.iter()
        .enumerate()
        .filter(|(_, x)| !num_traits::Zero::is_zero(*x))
        .map(|(e, x)| (system.label(e).to_string(), rational::format(x)))
        .collect()
}

/// Resolves a member given by labels. Digraph members may also be given by
/// their node sequence when no two arcs are parallel along it.
pub fn resolve_path(system: &SetSystem, labels: &[String]) -> Result<OrderedPath> {
    let ids = labels
        .iter()
        .map(|l| system.id_of(l).ok_or_else(|| parse_err(format!("unknown label {l:?}"))))
        .collect::<Result<Vec<ElementId>>>()?;
    if let Some(g) = system.as_digraph() {
        if ids.iter().all(|&e| !g.is_arc(e)) {
            let arcs = ids
                .windows(2)
                .map(|w| {
                    let found: Vec<usize> = g.out_arcs(w[0]).iter().copied().filter(|&k| g.arcs[k].1 == w[1]).collect();
                    match found.as_slice() {
                        [k] => Ok(*k),
                        [] => Err(parse_err(format!("no arc {} -> {}", system.label(w[0]), system.label(w[1])))),
                        _ => Err(parse_err("parallel arcs: list the arc labels explicitly")),
                    }
                })
                .collect::<Result<Vec<_>>>()?;
            return g.path_from_arcs(&arcs);
        }
    }
    OrderedPath::new(ids)
}

fn table_from_entries(system: &SetSystem, entries: &[RequirementEntry]) -> Result<RequirementTable> {
    let parsed = entries
        .iter()
        .map(|e| Ok((resolve_path(system, &e.path)?.sorted_ids(), rational::parse(&e.value)?)))
        .collect::<Result<Vec<_>>>()?;
    RequirementTable::from_entries(parsed)
}

pub fn parse_instance_file(text: &str) -> Result<InstanceFile> {
    serde_json::from_str(text).map_err(|e| parse_err(format!("instance: {e}")))
}

impl InstanceFile {
    pub fn build(&self) -> Result<Instance> {
        let system = build_system(&self.elements, &self.system)?;
        let rho = Marginals::new(vector_from_map(&system, &self.rho)?)?;
        let requirement = match (&self.mu, &self.pi) {
            (Some(_), Some(_)) => return Err(parse_err("give either mu or pi, not both")),
            (Some(mu), None) => Requirement::Affine(AffineRequirement::new(vector_from_map(&system, mu)?)?),
            (None, Some(pi)) => Requirement::Table(table_from_entries(&system, pi)?),
            (None, None) => Requirement::Affine(AffineRequirement::zeros(system.len())),
        };
        Ok(Instance { system, rho, requirement })
    }

    pub fn build_game(&self) -> Result<GameInstance> {
        let system = build_system(&self.elements, &self.system)?;
        let get = |m: &Option<BTreeMap<String, String>>, name: &str| match m {
            Some(m) => vector_from_map(&system, m),
            None => Err(parse_err(format!("game instances need {name:?}"))),
        };
        let (u, c, d) = (get(&self.u, "u")?, get(&self.c, "c")?, get(&self.d, "d")?);
        GameInstance::new(system, u, c, d)
    }
}

pub fn parse_instance(text: &str) -> Result<Instance> {
    parse_instance_file(text)?.build()
}

/// Writes an instance; tables are enumerated, so they need a small family.
pub fn instance_file(system: &SetSystem, rho: &Marginals, req: &Requirement) -> Result<InstanceFile> {
    let (elements, spec) = system_spec(system);
    let (mu, pi) = match req {
        Requirement::Affine(a) => (Some(map_from_vector(system, a.as_slice())), None),
        Requirement::Table(t) => {
            let entries = system
                .enumerate_members(ENUMERATION_LIMIT)?
                .iter()
                .map(|p| {
                    Ok(RequirementEntry { path: system.labels_of(p.elements()), value: rational::format(&t.value(p)?) })
                })
                .collect::<Result<Vec<_>>>()?;
            (None, Some(entries))
        }
    };
    Ok(InstanceFile {
        elements,
        system: spec,
        rho: map_from_vector(system, rho.as_slice()),
        mu,
        pi,
        u: None,
        c: None,
        d: None,
    })
}

pub fn game_file(game: &GameInstance) -> InstanceFile {
    let (elements, spec) = system_spec(&game.system);
    let m = |v: &[Rational]| Some(map_from_vector(&game.system, v));
    InstanceFile {
        elements,
        system: spec,
        rho: BTreeMap::new(),
        mu: None,
        pi: None,
        u: m(&game.u),
        c: m(&game.c),
        d: m(&game.d),
    }
}

pub fn decomposition_json(system: &SetSystem, x: &Decomposition) -> Value {
    let support: Vec<Value> =
        x.support().iter().map(|(set, p)| json!({"set": system.labels_of(set), "p": rational::format(p)})).collect();
    json!({ "support": support })
}

#[derive(Deserialize)]
struct DecompositionFile {
    support: Vec<SupportEntry>,
}

#[derive(Deserialize)]
struct SupportEntry {
    set: Vec<String>,
    p: String,
}

pub fn parse_decomposition(system: &SetSystem, text: &str) -> Result<Decomposition> {
    let file: DecompositionFile = serde_json::from_str(text).map_err(|e| parse_err(format!("decomposition: {e}")))?;
    decomposition_from_entries(system, file.support.into_iter().map(|e| (e.set, e.p)))
}

pub fn decomposition_from_value(system: &SetSystem, value: &Value) -> Result<Decomposition> {
    parse_decomposition(system, &value.to_string())
}

fn decomposition_from_entries(
    system: &SetSystem,
    entries: impl IntoIterator<Item = (Vec<String>, String)>,
) -> Result<Decomposition> {
    let parsed = entries
        .into_iter()
        .map(|(set, p)| {
            let ids = set
                .iter()
                .map(|l| system.id_of(l).ok_or_else(|| parse_err(format!("unknown label {l:?}"))))
                .collect::<Result<Vec<_>>>()?;
            Ok((ids, rational::parse(&p)?))
        })
        .collect::<Result<Vec<_>>>()?;
    Decomposition::from_weighted(parsed)
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ChainEntry {
    pub chain: Vec<String>,
    pub value: String,
}

/// `{"elements":[..], "covers":[[x,y],..], "pi":[{"chain":[..],"value":".."}], "rho":{..}}`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PosetFile {
    pub elements: Vec<String>,
    pub covers: Vec<(String, String)>,
    pub pi: Vec<ChainEntry>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rho: Option<BTreeMap<String, String>>,
}

pub struct PosetInstance {
    pub system: SetSystem,
    pub pi: RequirementTable,
    pub rho: Option<Marginals>,
}

pub fn parse_poset(text: &str) -> Result<PosetInstance> {
    let file: PosetFile = serde_json::from_str(text).map_err(|e| parse_err(format!("poset: {e}")))?;
    let system = build_system(&file.elements, &SystemSpec::Poset { covers: file.covers.clone() })?;
    let entries: Vec<RequirementEntry> =
        file.pi.iter().map(|c| RequirementEntry { path: c.chain.clone(), value: c.value.clone() }).collect();
    let pi = table_from_entries(&system, &entries)?;
    let rho = file.rho.as_ref().map(|m| vector_from_map(&system, m).and_then(Marginals::new)).transpose()?;
    Ok(PosetInstance { system, pi, rho })
}

/// Witness report for structurally infeasible outcomes.
pub fn error_json(system: Option<&SetSystem>, err: &Error) -> Value {
    let labels = |p: &OrderedPath| match system {
        Some(s) => json!(s.labels_of(p.elements())),
        None => json!(p.elements()),
    };
    let mut v = json!({ "error": err.to_string(), "infeasible": err.is_infeasibility() });
    match err {
        Error::InfeasibleMarginals { witness, covered, required } => {
            v["witness"] = json!({
                "path": labels(witness),
                "covered": rational::format(covered),
                "required": rational::format(required),
            });
        }
        Error::ConservationViolation { witness, reason } => {
            v["witness"] = json!({ "paths": witness.iter().map(labels).collect::<Vec<_>>(), "reason": reason });
        }
        _ => {}
    }
    v
}
