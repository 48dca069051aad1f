//! JSON reports shared by the command-line tool and the browser demo.

use num_traits::Zero;
use serde_json::{json, Map, Value};

use crate::asp::{self, AspOptions};
use crate::conservation;
use crate::decomp::{self, AlphaLabels, AlphaStep, Decomposition};
use crate::error::{Error, Result};
use crate::game::{self, GameInstance, VERIFY_LIMIT};
use crate::io::{self, Instance, PosetInstance};
use crate::pipeline::{self, Detail, Method};
use crate::rational::{self, Rational};
use crate::system::{ElementId, Marginals, OrderedPath, Requirement, RequirementTable, SetSystem};

fn fmt(r: &Rational) -> Value {
    json!(rational::format(r))
}

fn labels(system: &SetSystem, p: &OrderedPath) -> Value {
    json!(system.labels_of(p.elements()))
}

fn label_or_dummy(system: &SetSystem, e: Option<ElementId>) -> Value {
    match e {
        Some(e) => json!(system.label(e)),
        None => Value::Null,
    }
}

/// Nonzero entries only, keyed by label.
fn sparse_map(system: &SetSystem, v: &[Rational]) -> Value {
    let mut m = Map::new();
    for (e, x) in v.iter().enumerate() {
        if !x.is_zero() {
            m.insert(system.label(e).to_string(), fmt(x));
        }
    }
    Value::Object(m)
}

fn alpha_json(system: &SetSystem, alpha: &AlphaLabels) -> Value {
    let mut m = Map::new();
    for (e, a) in alpha.alpha.iter().enumerate() {
        if let Some(a) = a {
            m.insert(system.label(e).to_string(), fmt(a));
        }
    }
    Value::Object(m)
}

fn alpha_steps_json(system: &SetSystem, steps: &[AlphaStep]) -> Value {
    steps
        .iter()
        .map(|s| {
            json!({
                "path": labels(system, &s.path),
                "restrictedCost": fmt(&s.restricted_cost),
                "element": system.label(s.element),
                "alpha": fmt(&s.alpha),
            })
        })
        .collect()
}

/// Verification summary, or `null` when the members are too many to list.
fn verification(x: &Decomposition, rho: &Marginals, req: &Requirement, system: &SetSystem) -> Result<Value> {
    match decomp::verify_decomposition(x, rho, req, system) {
        Ok(r) => Ok(verification_json(system, &r)),
        Err(Error::SizeGuard { .. }) => Ok(Value::Null),
        Err(e) => Err(e),
    }
}

fn verification_json(system: &SetSystem, r: &decomp::VerificationReport) -> Value {
    json!({
        "passed": r.passed(),
        "massResidual": fmt(&r.mass_residual),
        "marginalResiduals": sparse_map(system, &r.marginal_residuals),
        "pathsChecked": r.paths_checked,
        "minSlack": r.min_slack.as_ref().map(fmt),
        "worstPath": r.worst_path.as_ref().map(|p| labels(system, p)),
        "problems": r.problems,
    })
}

/// Decomposition JSON extended with the route taken and a verification summary.
pub fn decompose(inst: &Instance, method: Method, trace: bool) -> Result<Value> {
    let out = pipeline::decompose(&inst.system, &inst.rho, &inst.requirement, method)?;
    let mut v = io::decomposition_json(&inst.system, &out.decomposition);
    v["method"] = json!(out.method.name());
    v["verification"] = verification(&out.decomposition, &inst.rho, &inst.requirement, &inst.system)?;
    if trace {
        v["trace"] = match &out.detail {
            Detail::Labels(d) => json!({
                "alpha": alpha_json(&inst.system, &d.alpha),
                "steps": alpha_steps_json(&inst.system, &d.steps),
                "preLift": io::decomposition_json(&inst.system, &d.pre_lift),
            }),
            Detail::Covers(d) => json!({
                "covers": d.cover.lambda.iter().map(|(set, l)| json!({
                    "cover": inst.system.labels_of(set),
                    "lambda": fmt(l),
                })).collect::<Vec<_>>(),
                "residual": sparse_map(&inst.system, &d.cover.residual),
                "thresholds": sparse_map(&inst.system, &d.thresholds),
                "preLift": io::decomposition_json(&inst.system, &d.pre_lift),
            }),
            Detail::Reduction(d) => {
                let h = &d.hasse.system;
                json!({
                    "mu": sparse_map(h, &d.shift.mu),
                    "alpha": alpha_json(h, &d.lifted.alpha),
                    "validatedPaths": d.shift.validated_paths,
                })
            }
            Detail::Lp => Value::Null,
        };
    }
    Ok(v)
}

/// The (⋆) weights `ρ + μ`, or `ρ` alone for requirement tables.
pub fn default_costs(inst: &Instance) -> Vec<Rational> {
    match &inst.requirement {
        Requirement::Affine(mu) => inst.rho.as_slice().iter().zip(mu.as_slice()).map(|(r, m)| r + m).collect(),
        Requirement::Table(_) => inst.rho.as_slice().to_vec(),
    }
}

pub fn shortest_path(system: &SetSystem, gamma: &[Rational], trace: bool) -> Result<Value> {
    let out = asp::shortest_path_detailed(system, gamma, &AspOptions { check_invariant: None, record_trace: trace })?;
    let mut v = match &out.best {
        Some((p, c)) => json!({ "path": labels(system, p), "cost": fmt(c) }),
        None => json!({ "path": null, "cost": null }),
    };
    v["oracleCalls"] = json!(out.oracle_calls);
    if trace {
        v["trace"] = out
            .trace
            .iter()
            .map(|s| {
                json!({
                    "processed": label_or_dummy(system, s.processed),
                    "psi": fmt(&s.psi),
                    "oracleCalls": s.oracle_calls,
                    "updates": s.updates.iter().map(|u| json!({
                        "element": label_or_dummy(system, u.element),
                        "psi": fmt(&u.psi),
                    })).collect::<Vec<_>>(),
                })
            })
            .collect();
    }
    Ok(v)
}

/// `{"value", "flow", "sigmaI", "verified"}` plus the dual vectors.
pub fn solve_game(instance: &GameInstance) -> Result<Value> {
    let sol = game::solve_game(instance)?;
    let system = &instance.system;
    let verified = if system.len() <= VERIFY_LIMIT {
        Some(game::verify_equilibrium(instance, &sol.lps.flow, &sol.sigma_i)?.passed())
    } else {
        None
    };
    Ok(json!({
        "value": fmt(&sol.lps.value),
        "flow": sol.lps.flow.iter().map(|(p, f)| json!({ "path": labels(system, p), "value": fmt(f) })).collect::<Vec<_>>(),
        "sigmaI": io::decomposition_json(system, &sol.sigma_i),
        "verified": verified.unwrap_or(false),
        "verificationSkipped": verified.is_none(),
        "eta": sparse_map(system, &sol.lps.eta),
        "rhoStar": sparse_map(system, sol.rho_star.as_slice()),
        "pricingRounds": sol.lps.pricing_rounds,
        "method": sol.method.name(),
    }))
}

/// Returns the report and whether the decomposition passed.
pub fn verify(inst: &Instance, x: &Decomposition) -> Result<(Value, bool)> {
    let r = decomp::verify_decomposition(x, &inst.rho, &inst.requirement, &inst.system)?;
    Ok((verification_json(&inst.system, &r), r.passed()))
}

fn conservation_fields(h: &SetSystem, shift: &conservation::PotentialShift) -> Value {
    let mut phi = Map::new();
    for (v, p) in shift.phi.iter().enumerate() {
        if let Some(p) = p {
            phi.insert(h.label(v).to_string(), fmt(p));
        }
    }
    json!({
        "mu": sparse_map(h, &shift.mu),
        "phi": Value::Object(phi),
        "validatedPaths": shift.validated_paths,
        "exhaustive": shift.exhaustive,
    })
}

/// Poset chains to an affine requirement on the Hasse diagram, and the
/// decomposition if marginals are given.
pub fn reduce_poset(inst: &PosetInstance) -> Result<Value> {
    let hasse = conservation::hasse_diagram(&inst.system)?;
    let h = &hasse.system;
    let g = hasse.digraph();
    let shift = conservation::compute_mu(h, &hasse.lift_requirement(&inst.pi))?;
    let mut v = conservation_fields(h, &shift);
    v["hasse"] = json!({
        "nodes": (0..g.num_nodes).map(|n| h.label(n)).collect::<Vec<_>>(),
        "arcs": g.arcs.iter().map(|&(a, b)| [h.label(a), h.label(b)]).collect::<Vec<_>>(),
        "virtualSource": hasse.virtual_source,
        "virtualSink": hasse.virtual_sink,
    });
    if let Some(rho) = &inst.rho {
        let out = conservation::decompose_poset_marginals(&inst.system, &inst.pi, rho)?;
        v["decomposition"] = io::decomposition_json(&inst.system, &out.decomposition);
    }
    Ok(v)
}

/// Path requirements on an acyclic digraph to arc weights `μ`.
pub fn reduce_digraph(system: &SetSystem, pi: &RequirementTable) -> Result<Value> {
    let shift = conservation::compute_mu(system, pi)?;
    Ok(conservation_fields(system, &shift))
}

/// The vector `y = ρ + μ` outside the cover hull, and for small systems
/// whether any feasible decomposition exists at all.
pub fn not_mfmc_witness(inst: &Instance) -> Value {
    let mut v = io::error_json(Some(&inst.system), &Error::NotWeakMfmc);
    let exists = if inst.system.len() <= decomp::BRUTE_FORCE_LIMIT {
        decomp::brute_force_feasibility(&inst.system, &inst.requirement, &inst.rho).ok().map(|x| x.is_some())
    } else {
        None
    };
    v["witness"] = json!({ "y": sparse_map(&inst.system, &default_costs(inst)), "anyDecompositionExists": exists });
    v
}
