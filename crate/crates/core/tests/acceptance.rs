//! Acceptance suite: one pass/fail line per criterion.
//!
//! Runs without the libtest harness so the lines show up under a plain
//! `cargo test`. Exits non-zero when any criterion fails.

use std::process::ExitCode;
use std::time::{Duration, Instant};

use mdecomp::asp::{self, AspOptions};
use mdecomp::conservation;
use mdecomp::decomp::{self, Decomposition};
use mdecomp::game::{self, GameInstance};
use mdecomp::generate::{self, StarTarget};
use mdecomp::lp::LinearSystemSolution;
use mdecomp::mfmc;
use mdecomp::nae3sat;
use mdecomp::pipeline::{self, Detail, Method};
use mdecomp::rational::{int, ratio};
use mdecomp::system::{check_condition_star, RequirementTable, ENUMERATION_LIMIT};
use mdecomp::{AffineRequirement, Error, Marginals, Rational, Requirement, SetSystem};
use num_traits::{One, Signed, Zero};
use rand::Rng;
use rand_chacha::ChaCha8Rng;

const C1_INSTANCES: usize = 1000;
const C1_TIME_LIMIT: Duration = Duration::from_secs(10);
const C2_INSTANCES: usize = 1000;
const C2_TIME_LIMIT: Duration = Duration::from_secs(5);
const C3_INSTANCES: usize = 300;
const C4_INSTANCES: usize = 200;
const C4_MAX_ELEMENTS: usize = 12;
const C5_INSTANCES: usize = 200;
const C6_INSTANCES: usize = 500;
const C6_DIGITS: usize = 40;
const C7_INSTANCES: usize = 50;
const C7_MAX_VARS: usize = 6;
const C8_INSTANCES: usize = 100;

struct Line {
    passed: bool,
    detail: String,
}

fn line(passed: bool, detail: impl Into<String>) -> Line {
    Line { passed, detail: detail.into() }
}

fn elapsed(t: Instant) -> String {
    format!("{:.2}s", t.elapsed().as_secs_f64())
}

/// Decomposition pipeline on digraphs, posets and explicit abstract networks.
fn criterion_1(rng: &mut ChaCha8Rng) -> mdecomp::Result<Line> {
    let start = Instant::now();
    let mut failures = Vec::new();
    let mut kinds = [0usize; 3];
    for i in 0..C1_INSTANCES {
        let kind = i % 3;
        let system = match kind {
            0 => {
                let nodes = rng.gen_range(2..=12);
                let back = if rng.gen_bool(0.25) { 2 } else { 0 };
                generate::random_digraph(rng, nodes, 0.15, back)?
            }
            1 => {
                let n = rng.gen_range(1..=12);
                generate::random_poset(rng, n, 0.35)?
            }
            _ => generate::random_explicit_network(rng, 12)?,
        };
        kinds[kind] += 1;
        let target = if rng.gen_bool(0.5) { StarTarget::Tight } else { StarTarget::Holds };
        let (rho, mu) = generate::random_marginals(rng, &system, 6, 0.5, target)?;
        let out = pipeline::decompose_affine_auto(&system, &rho, &mu)?;
        let pre_lift_len = match &out.detail {
            Detail::Labels(d) => d.pre_lift.len(),
            _ => {
                failures.push(format!("instance {i}: unexpected route {}", out.method.name()));
                continue;
            }
        };
        let report = decomp::verify_decomposition(&out.decomposition, &rho, &Requirement::Affine(mu), &system)?;
        let support_ok = pre_lift_len <= 2 * system.len() + 1;
        if !report.passed() || !support_ok {
            failures.push(format!("instance {i}: report {report:?}, pre-lift support {pre_lift_len}"));
        }
    }
    let time_ok = start.elapsed() < C1_TIME_LIMIT;
    Ok(line(
        failures.is_empty() && time_ok,
        format!(
            "{C1_INSTANCES} instances ({} digraph, {} poset, {} explicit), {} failures, {} (limit {}s){}",
            kinds[0],
            kinds[1],
            kinds[2],
            failures.len(),
            elapsed(start),
            C1_TIME_LIMIT.as_secs(),
            failures.first().map(|f| format!("; first: {f}")).unwrap_or_default()
        ),
    ))
}

/// Label-setting search against enumeration, with the invariant checked at
/// every outer iteration and the oracle calls counted.
fn criterion_2(rng: &mut ChaCha8Rng) -> mdecomp::Result<Line> {
    let start = Instant::now();
    let mut failures = Vec::new();
    let mut max_ratio = 0f64;
    let mut checks = 0usize;
    let options = AspOptions { check_invariant: Some(true), record_trace: false };
    for i in 0..C2_INSTANCES {
        let system = match i % 3 {
            0 => {
                let nodes = rng.gen_range(2..=10);
                generate::random_digraph(rng, nodes, 0.2, if i % 2 == 0 { 1 } else { 0 })?
            }
            1 => {
                let n = rng.gen_range(1..=10);
                generate::random_poset(rng, n, 0.35)?
            }
            _ => generate::random_explicit_network(rng, 10)?,
        };
        let gamma: Vec<Rational> = (0..system.len()).map(|_| generate::small_rational(rng, 5)).collect();
        let out = asp::shortest_path_detailed(&system, &gamma, &options)?;
        let brute = system.enumerate_members(ENUMERATION_LIMIT)?.iter().map(|p| p.cost(&gamma)).min();
        let got = out.best.as_ref().map(|(p, c)| {
            if p.cost(&gamma) != *c {
                failures.push(format!("instance {i}: reported cost differs from path cost"));
            }
            c.clone()
        });
        if got != brute {
            failures.push(format!("instance {i}: search {got:?}, enumeration {brute:?}"));
        }
        if out.invariant_checks != out.processing_order.len() + 1 {
            failures.push(format!("instance {i}: invariant checked {} times", out.invariant_checks));
        }
        checks += out.invariant_checks;
        let e = out.augmented_size;
        if out.oracle_calls > e * e {
            failures.push(format!("instance {i}: {} oracle calls for |E| = {e}", out.oracle_calls));
        }
        max_ratio = max_ratio.max(out.oracle_calls as f64 / (e * e) as f64);
    }
    let time_ok = start.elapsed() < C2_TIME_LIMIT;
    Ok(line(
        failures.is_empty() && time_ok,
        format!(
            "{C2_INSTANCES} instances, {} failures, {checks} invariant checks, max calls/|E|^2 = {max_ratio:.3}, {} (limit {}s){}",
            failures.len(),
            elapsed(start),
            C2_TIME_LIMIT.as_secs(),
            failures.first().map(|f| format!("; first: {f}")).unwrap_or_default()
        ),
    ))
}

/// Label pipeline vs. brute-force LP on digraphs; the triangle in both routes.
fn criterion_3(rng: &mut ChaCha8Rng) -> mdecomp::Result<Line> {
    let start = Instant::now();
    let (mut agree, mut feasible) = (0usize, 0usize);
    let mut disagreements = Vec::new();
    let mut done = 0;
    while done < C3_INSTANCES {
        let nodes = rng.gen_range(2..=5);
        let system = generate::random_dag(rng, nodes, 0.3)?;
        if system.len() > 10 {
            continue;
        }
        done += 1;
        let (rho, mu) = generate::random_marginals(rng, &system, 4, 0.5, StarTarget::Tight)?;
        // Shrinking ρ on half the instances breaks the tight member unless its weight is all μ.
        let rho = if rng.gen_bool(0.5) {
            Marginals::new(rho.as_slice().iter().map(|r| r * ratio(4, 5)).collect())?
        } else {
            rho
        };
        let req = Requirement::Affine(mu.clone());
        let pipeline_ok = match pipeline::decompose(&system, &rho, &req, Method::Digraph) {
            Ok(out) => decomp::verify_decomposition(&out.decomposition, &rho, &req, &system)?.passed(),
            Err(e) if e.is_infeasibility() => false,
            Err(e) => return Err(e),
        };
        let brute_ok = decomp::brute_force_feasibility(&system, &req, &rho)?.is_some();
        if pipeline_ok == brute_ok {
            agree += 1;
        } else {
            disagreements.push(done);
        }
        feasible += brute_ok as usize;
    }

    let tri = generate::triangle();
    let half = Marginals::new(vec![ratio(1, 2); 3])?;
    let zero_mu = AffineRequirement::zeros(3);
    let star = check_condition_star(&tri, &half, &Requirement::Affine(zero_mu.clone()))?.holds;
    let mfmc_refuses = matches!(mfmc::mfmc_decomposition(&tri, &half, &zero_mu), Err(Error::NotWeakMfmc));
    let brute_none = decomp::brute_force_feasibility(&tri, &Requirement::Affine(zero_mu), &half)?.is_none();
    Ok(line(
        agree == C3_INSTANCES && star && mfmc_refuses && brute_none,
        format!(
            "agreement {agree}/{C3_INSTANCES} ({feasible} feasible); triangle: (*) holds {star}, cover route refuses {mfmc_refuses}, LP finds none {brute_none}; {}{}",
            elapsed(start),
            disagreements.first().map(|d| format!("; first disagreement at {d}")).unwrap_or_default()
        ),
    ))
}

/// Column generation vs. full LP, and exact equilibrium verification.
fn criterion_4(rng: &mut ChaCha8Rng) -> mdecomp::Result<Line> {
    let start = Instant::now();
    let single = GameInstance::new(
        SetSystem::explicit(vec!["e".into()], vec![vec![0]])?,
        vec![int(1)],
        vec![int(0)],
        vec![ratio(1, 2)],
    )?;
    let single_value = game::solve_lps(&single)?.value;
    let (mut values_equal, mut verified, mut positive) = (0usize, 0usize, 0usize);
    let mut done = 0;
    while done < C4_INSTANCES {
        let nodes = rng.gen_range(3..=5);
        let positive_costs = rng.gen_bool(0.5);
        let inst = generate::random_game(rng, nodes, positive_costs)?;
        if inst.system.len() > C4_MAX_ELEMENTS {
            continue;
        }
        done += 1;
        let sol = game::solve_game(&inst)?;
        if sol.lps.value == game::full_lp_value(&inst)? {
            values_equal += 1;
        }
        positive += sol.lps.value.is_positive() as usize;
        let report = game::verify_equilibrium(&inst, &sol.lps.flow, &sol.sigma_i)?;
        if report.router_improvement().is_zero() && report.interdictor_improvement().is_zero() {
            verified += 1;
        }
    }
    let ok = single_value == ratio(1, 2) && values_equal == C4_INSTANCES && verified == C4_INSTANCES;
    Ok(line(
        ok,
        format!(
            "LP values equal {values_equal}/{C4_INSTANCES}, zero improvement {verified}/{C4_INSTANCES} ({positive} with positive value), single-element value {single_value}; {}",
            elapsed(start)
        ),
    ))
}

/// Planted affine requirements recovered through the potential shift, and
/// the bipartite poset whose requirement is affine only with arc weights.
fn criterion_5(rng: &mut ChaCha8Rng) -> mdecomp::Result<Line> {
    let start = Instant::now();
    let mut good = 0usize;
    let mut paths = 0usize;
    for _ in 0..C5_INSTANCES {
        let nodes = rng.gen_range(2..=10);
        let system = generate::random_dag(rng, nodes, 0.3)?;
        let members = system.enumerate_members(ENUMERATION_LIMIT)?;
        let mut planted: Vec<Rational> = (0..system.len()).map(|_| generate::small_rational(rng, 5)).collect();
        let heaviest = members.iter().map(|p| p.cost(&planted)).max().unwrap_or_else(Rational::zero);
        if heaviest > Rational::one() {
            for m in planted.iter_mut() {
                *m = &*m / &heaviest;
            }
        }
        let table = RequirementTable::from_entries(
            members.iter().map(|p| (p.sorted_ids(), Rational::one() - p.cost(&planted))),
        )?;
        let shift = conservation::compute_mu(&system, &table)?;
        let in_range = shift.mu.iter().all(mdecomp::rational::in_unit_interval);
        let exact = members.iter().all(|p| table.value(p).ok() == Some(Rational::one() - p.cost(&shift.mu)));
        paths += members.len();
        good += (in_range && exact) as usize;
    }

    let poset =
        SetSystem::poset(vec!["a0".into(), "a1".into(), "z0".into(), "z1".into()], &[(0, 2), (0, 3), (1, 2), (1, 3)])?;
    let pi = RequirementTable::from_entries([
        (vec![0, 2], int(0)),
        (vec![0, 3], int(1)),
        (vec![1, 2], int(1)),
        (vec![1, 3], int(1)),
    ])?;
    let direct_inconsistent = match conservation::affine_on_ground(&poset, &pi)? {
        LinearSystemSolution::Inconsistent { certificate } => {
            let b: Vec<Rational> =
                poset.enumerate_members(10)?.iter().map(|p| Rational::one() - pi.value(p).expect("listed")).collect();
            let yb: Rational = certificate.iter().zip(&b).map(|(y, b)| y * b).sum();
            !yb.is_zero()
        }
        LinearSystemSolution::Consistent { .. } => false,
    };
    let hasse = conservation::hasse_diagram(&poset)?;
    let lifted = hasse.lift_requirement(&pi);
    let hasse_ok = match conservation::compute_mu(&hasse.system, &lifted) {
        Ok(shift) => hasse
            .system
            .enumerate_members(10)?
            .iter()
            .all(|p| lifted.value(p).ok() == Some(Rational::one() - p.cost(&shift.mu))),
        Err(_) => false,
    };
    Ok(line(
        good == C5_INSTANCES && direct_inconsistent && hasse_ok,
        format!(
            "round trips {good}/{C5_INSTANCES} over {paths} paths; bipartite poset: ground system inconsistent {direct_inconsistent}, Hasse route exact {hasse_ok}; {}",
            elapsed(start)
        ),
    ))
}

fn random_family(rng: &mut ChaCha8Rng) -> mdecomp::Result<SetSystem> {
    let n = rng.gen_range(1..=10);
    let m = rng.gen_range(1..=8);
    let mut paths: Vec<Vec<usize>> = Vec::new();
    for _ in 0..m {
        let k = rng.gen_range(1..=n);
        let p = rand::seq::index::sample(rng, n, k).into_vec();
        if !paths.contains(&p) {
            paths.push(p);
        }
    }
    SetSystem::explicit((0..n).map(|i| format!("e{i}")).collect(), paths)
}

/// Independent rounding against both coverage bounds.
fn criterion_6(rng: &mut ChaCha8Rng) -> mdecomp::Result<Line> {
    let start = Instant::now();
    let upper = decomp::one_minus_inv_e_upper(C6_DIGITS);
    let (mut exact_ok, mut e_ok, mut paths) = (0usize, 0usize, 0usize);
    for i in 0..C6_INSTANCES {
        let system = match i % 3 {
            0 => random_family(rng)?,
            1 => {
                let nodes = rng.gen_range(2..=6);
                generate::random_dag(rng, nodes, 0.3)?
            }
            _ => {
                let n = rng.gen_range(1..=10);
                generate::random_poset(rng, n, 0.35)?
            }
        };
        let rho = Marginals::new((0..system.len()).map(|_| generate::small_rational(rng, 6)).collect())?;
        let members = system.enumerate_members(ENUMERATION_LIMIT)?;
        let entries: Vec<(Vec<usize>, Rational)> = members
            .iter()
            .map(|p| {
                let cap = mdecomp::rational::min(&p.cost(rho.as_slice()), &Rational::one());
                (p.sorted_ids(), cap * generate::small_rational(rng, 4))
            })
            .collect();
        let table = RequirementTable::from_entries(entries)?;
        let req = Requirement::Table(table.clone());
        assert!(check_condition_star(&system, &rho, &req)?.holds);
        let x = decomp::independent_rounding(&rho);
        let (mut all_exact, mut all_e) = (true, true);
        for p in &members {
            let pi = table.value(p)?;
            let cov = x.coverage(p);
            all_exact &= cov >= decomp::rounding_bound(&pi, p.len());
            all_e &= cov >= &upper * &pi;
            paths += 1;
        }
        exact_ok += all_exact as usize;
        e_ok += all_e as usize;
    }
    Ok(line(
        exact_ok == C6_INSTANCES && e_ok == C6_INSTANCES,
        format!(
            "exact bound {exact_ok}/{C6_INSTANCES}, (1-1/e) bound at {C6_DIGITS} digits {e_ok}/{C6_INSTANCES}, {paths} paths; {}",
            elapsed(start)
        ),
    ))
}

/// NAE3SAT instances: LP feasibility of the reduction vs. direct search.
fn criterion_7(rng: &mut ChaCha8Rng) -> mdecomp::Result<Line> {
    let start = Instant::now();
    let (mut agree, mut sat) = (0usize, 0usize);
    for _ in 0..C7_INSTANCES {
        let vars = rng.gen_range(3..=C7_MAX_VARS);
        let clauses = rng.gen_range(0..=3 * vars);
        let inst = nae3sat::random_instance(rng, vars, clauses)?;
        let direct = nae3sat::solve_brute_force(&inst).is_some();
        let r = nae3sat::reduce(&inst)?;
        let lp = decomp::brute_force_feasibility(&r.system, &Requirement::Table(r.pi.clone()), &r.rho)?.is_some();
        agree += (direct == lp) as usize;
        sat += direct as usize;
    }
    Ok(line(agree == C7_INSTANCES, format!("agreement {agree}/{C7_INSTANCES} ({sat} satisfiable); {}", elapsed(start))))
}

fn empty_mass(x: &Decomposition) -> Rational {
    x.mass_of(&[])
}

/// Positive empty-set mass before the lift, for positive `μ` and
/// minimalized marginals. Half the instances come from games with `c > 0`.
fn criterion_8(rng: &mut ChaCha8Rng) -> mdecomp::Result<Line> {
    let start = Instant::now();
    let (mut positive, mut from_games, mut optimal_kept) = (0usize, 0usize, 0usize);
    let mut i = 0;
    while i < C8_INSTANCES {
        let (system, rho, mu) = if i % 2 == 0 {
            let nodes = rng.gen_range(3..=5);
            let inst = generate::random_game(rng, nodes, true)?;
            if inst.system.len() > 12 {
                continue;
            }
            let sol = game::solve_game(&inst)?;
            let rho = mfmc::minimalize_rho(&inst.system, &sol.rho_star, &sol.mu)?;
            let dual: Rational =
                (0..inst.system.len()).map(|e| &inst.u[e] * &sol.lps.eta[e] + &inst.d[e] * rho.get(e)).sum();
            optimal_kept += (dual == sol.lps.value) as usize;
            from_games += 1;
            (inst.system, rho, sol.mu)
        } else {
            let system = generate::random_explicit_network(rng, 10)?;
            let mu = AffineRequirement::new((0..system.len()).map(|_| ratio(rng.gen_range(1..=4), 12)).collect())?;
            let rho = Marginals::new((0..system.len()).map(|_| generate::small_rational(rng, 4)).collect())?;
            let weights: Vec<Rational> = rho.as_slice().iter().zip(mu.as_slice()).map(|(r, m)| r + m).collect();
            let rho = match asp::min_cost_member(&system, &weights)? {
                Some((_, w)) if w < Rational::one() => {
                    // Raise ρ until (⋆) holds; minimalization lowers it again.
                    Marginals::new(vec![Rational::one(); system.len()])?
                }
                _ => rho,
            };
            let rho = mfmc::minimalize_rho(&system, &rho, &mu)?;
            (system, rho, mu)
        };
        i += 1;
        if !mu.as_slice().iter().all(|m| m.is_positive()) {
            continue;
        }
        let out = mfmc::mfmc_decomposition(&system, &rho, &mu)?;
        positive += empty_mass(&out.pre_lift).is_positive() as usize;
    }
    Ok(line(
        positive == C8_INSTANCES && optimal_kept == from_games,
        format!(
            "positive empty-set mass {positive}/{C8_INSTANCES} ({from_games} from games, minimalized marginals optimal in {optimal_kept}); {}",
            elapsed(start)
        ),
    ))
}

type Criterion = fn(&mut ChaCha8Rng) -> mdecomp::Result<Line>;

fn main() -> ExitCode {
    let criteria: [(&str, Criterion); 8] = [
        ("decomposition correctness", criterion_1),
        ("shortest-path correctness", criterion_2),
        ("oracle agreement", criterion_3),
        ("game equilibria", criterion_4),
        ("conservation round trip", criterion_5),
        ("rounding approximation", criterion_6),
        ("hardness reduction", criterion_7),
        ("empty-set mass", criterion_8),
    ];
    let mut all = true;
    for (k, (name, run)) in criteria.iter().enumerate() {
        let mut rng = generate::rng(1000 + k as u64);
        let l = run(&mut rng).unwrap_or_else(|e| line(false, format!("error: {e}")));
        all &= l.passed;
        println!("criterion {} [{}] {name}: {}", k + 1, if l.passed { "PASS" } else { "FAIL" }, l.detail);
    }
    if all {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
