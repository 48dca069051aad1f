//! Seeded instance generators. Every generator draws from a ChaCha8 stream,
//! so a seed fixes the output on every platform.

use num_traits::{One, Zero};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::asp;
use crate::error::{precondition, Result};
use crate::game::GameInstance;
use crate::rational::{self, Rational};
use crate::system::{AffineRequirement, Marginals, SetSystem, ENUMERATION_LIMIT};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// A uniform draw from `{0, 1/den, …, 1}`.
pub fn small_rational<R: Rng + ?Sized>(rng: &mut R, max_den: i64) -> Rational {
    let den = rng.gen_range(1..=max_den);
    rational::ratio(rng.gen_range(0..=den), den)
}

fn names(prefix: &str, n: usize) -> Vec<String> {
    (0..n).map(|i| format!("{prefix}{i}")).collect()
}

/// Random digraph on `nodes ≥ 2` nodes with `s = 0` and `t = nodes − 1`.
///
/// Every node gets one arc from a lower node and one to a higher node, so it
/// lies on an `s`-`t` path; further forward arcs appear with probability
/// `density`. With `back_arcs`, a few arcs point backwards and create cycles.
pub fn random_digraph<R: Rng + ?Sized>(rng: &mut R, nodes: usize, density: f64, back_arcs: usize) -> Result<SetSystem> {
    if nodes < 2 {
        return Err(precondition("a digraph needs at least two nodes"));
    }
    let mut arcs: Vec<(usize, usize)> = Vec::new();
    let push = |arcs: &mut Vec<(usize, usize)>, a: (usize, usize)| {
        if !arcs.contains(&a) {
            arcs.push(a);
        }
    };
    for w in 1..nodes {
        let v = rng.gen_range(0..w);
        push(&mut arcs, (v, w));
    }
    for v in 0..nodes - 1 {
        let w = rng.gen_range(v + 1..nodes);
        push(&mut arcs, (v, w));
    }
    for v in 0..nodes {
        for w in v + 1..nodes {
            if rng.gen_bool(density) {
                push(&mut arcs, (v, w));
            }
        }
    }
    if nodes > 2 {
        for _ in 0..back_arcs {
            let v = rng.gen_range(1..nodes - 1);
            let w = rng.gen_range(1..nodes - 1);
            if w < v {
                push(&mut arcs, (v, w));
            }
        }
    }
    arcs.sort_unstable();
    SetSystem::digraph(names("v", nodes), arcs, 0, nodes - 1, None)
}

pub fn random_dag<R: Rng + ?Sized>(rng: &mut R, nodes: usize, density: f64) -> Result<SetSystem> {
    random_digraph(rng, nodes, density, 0)
}

/// Random order: `i ≺ j` for `i < j` with probability `density`.
pub fn random_poset<R: Rng + ?Sized>(rng: &mut R, n: usize, density: f64) -> Result<SetSystem> {
    let mut rel = Vec::new();
    for i in 0..n {
        for j in i + 1..n {
            if rng.gen_bool(density) {
                rel.push((i, j));
            }
        }
    }
    SetSystem::poset(names("p", n), &rel)
}

/// Lists the members of `source` explicitly, with element ids and member
/// order shuffled. Splices survive relabeling, so an abstract network stays one.
pub fn relabeled_explicit<R: Rng + ?Sized>(rng: &mut R, source: &SetSystem) -> Result<SetSystem> {
    let n = source.len();
    let mut perm: Vec<usize> = (0..n).collect();
    perm.shuffle(rng);
    let mut paths: Vec<Vec<usize>> = source
        .enumerate_members(ENUMERATION_LIMIT)?
        .iter()
        .map(|p| p.elements().iter().map(|&e| perm[e]).collect())
        .collect();
    paths.shuffle(rng);
    SetSystem::explicit(names("e", n), paths)
}

/// An explicit abstract network with at most `max_elements` elements, taken
/// from a small DAG or poset.
pub fn random_explicit_network<R: Rng + ?Sized>(rng: &mut R, max_elements: usize) -> Result<SetSystem> {
    loop {
        let source = if rng.gen_bool(0.5) {
            let n = rng.gen_range(1..=max_elements.max(1));
            random_poset(rng, n, 0.4)?
        } else {
            let nodes = rng.gen_range(2..=4);
            random_dag(rng, nodes, 0.4)?
        };
        if source.len() <= max_elements {
            return relabeled_explicit(rng, &source);
        }
    }
}

/// The triangle `{1,2}, {2,3}, {1,3}`: not an abstract network and not weakly MFMC.
pub fn triangle() -> SetSystem {
    SetSystem::explicit(vec!["1".into(), "2".into(), "3".into()], vec![vec![0, 1], vec![1, 2], vec![0, 2]])
        .expect("fixed preset")
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StarTarget {
    /// Smallest member weight `Σ(ρ+μ)` exactly 1.
    Tight,
    /// Smallest member weight at least 1.
    Holds,
    /// No adjustment.
    Raw,
}

/// Random `(ρ, μ)` with denominators up to `max_den`.
///
/// `Tight` and `Holds` rescale both vectors by one factor so the smallest
/// member weight hits its target, then cap entries at 1. Capping only
/// touches members that already weigh at least 1, and the minimizing member
/// has no entry above 1, so the target survives.
pub fn random_marginals<R: Rng + ?Sized>(
    rng: &mut R,
    system: &SetSystem,
    max_den: i64,
    mu_density: f64,
    target: StarTarget,
) -> Result<(Marginals, AffineRequirement)> {
    let n = system.len();
    loop {
        let rho: Vec<Rational> = (0..n).map(|_| small_rational(rng, max_den)).collect();
        let mu: Vec<Rational> = (0..n)
            .map(|_| {
                if rng.gen_bool(mu_density) {
                    small_rational(rng, max_den) / rational::int(2)
                } else {
                    Rational::zero()
                }
            })
            .collect();
        let weights: Vec<Rational> = rho.iter().zip(&mu).map(|(r, m)| r + m).collect();
        let scale = match (target, asp::min_cost_member(system, &weights)?) {
            (StarTarget::Raw, _) | (_, None) => Rational::one(),
            (_, Some((_, m))) if m.is_zero() => continue,
            (StarTarget::Tight, Some((_, m))) => Rational::one() / m,
            (StarTarget::Holds, Some((_, m))) if m >= Rational::one() => Rational::one(),
            (StarTarget::Holds, Some((_, m))) => Rational::one() / m,
        };
        let one = Rational::one();
        let cap =
            |v: Vec<Rational>| -> Vec<Rational> { v.into_iter().map(|x| rational::min(&(x * &scale), &one)).collect() };
        return Ok((Marginals::new(cap(rho))?, AffineRequirement::new(cap(mu))?));
    }
}

/// A game on a random DAG. With `positive_costs`, every `c_e > 0`.
pub fn random_game<R: Rng + ?Sized>(rng: &mut R, nodes: usize, positive_costs: bool) -> Result<GameInstance> {
    let system = random_dag(rng, nodes, 0.3)?;
    let n = system.len();
    let u = (0..n).map(|_| rational::ratio(rng.gen_range(1..=4), 2)).collect();
    let c = (0..n)
        .map(|_| {
            let lo = if positive_costs { 1 } else { 0 };
            rational::ratio(rng.gen_range(lo..=3), 24)
        })
        .collect();
    let d = (0..n).map(|_| rational::ratio(rng.gen_range(1..=6), 6)).collect();
    GameInstance::new(system, u, c, d)
}
