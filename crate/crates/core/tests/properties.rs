//! Randomized invariants. Instances come from the seeded generators, so a
//! failing case is reproducible from the seed proptest reports.

use mdecomp::asp;
use mdecomp::conservation;
use mdecomp::decomp::{self, Decomposition};
use mdecomp::generate::{self, StarTarget};
use mdecomp::io;
use mdecomp::lp::{solve_lp, LinearProgram, Relation, Sense};
use mdecomp::pipeline::{self, Method};
use mdecomp::rational::{int, ratio};
use mdecomp::system::{RequirementTable, ENUMERATION_LIMIT};
use mdecomp::{Marginals, Rational, Requirement};
use num_traits::{One, Signed, Zero};
use proptest::prelude::*;
use rand::Rng;

fn small_ints(len: usize, lo: i64, hi: i64) -> impl Strategy<Value = Vec<i64>> {
    prop::collection::vec(lo..=hi, len)
}

/// `max c·x` subject to `Ax ≤ b`, `x ≥ 0`, with `b ≥ 0` so the origin is feasible.
fn packing_lp(rows: &[Vec<i64>], b: &[i64], c: &[i64]) -> LinearProgram {
    let mut lp = LinearProgram::new(c.len(), Sense::Maximize);
    lp.objective = c.iter().map(|&v| int(v)).collect();
    for (row, &rhs) in rows.iter().zip(b) {
        lp.add_constraint(row.iter().map(|&v| int(v)).collect(), Relation::Le, int(rhs));
    }
    // A box row keeps every instance bounded.
    lp.add_constraint(vec![int(1); c.len()], Relation::Le, int(10));
    lp
}

fn lp_case() -> impl Strategy<Value = (Vec<Vec<i64>>, Vec<i64>, Vec<i64>)> {
    (1usize..5, 1usize..4).prop_flat_map(|(n, m)| {
        (prop::collection::vec(small_ints(n, -3, 4), m), small_ints(m, 0, 6), small_ints(n, -2, 5))
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn lp_value_ignores_row_order((rows, b, c) in lp_case(), rot in 0usize..4) {
        let base = solve_lp(&packing_lp(&rows, &b, &c)).unwrap();
        prop_assert!(base.is_optimal());
        let k = rot % rows.len();
        let (mut r2, mut b2) = (rows.clone(), b.clone());
        r2.rotate_left(k);
        b2.rotate_left(k);
        r2.reverse();
        b2.reverse();
        let other = solve_lp(&packing_lp(&r2, &b2, &c)).unwrap();
        prop_assert_eq!(base.objective, other.objective);
    }

    #[test]
    fn lp_complementary_slackness((rows, b, c) in lp_case()) {
        let lp = packing_lp(&rows, &b, &c);
        let sol = solve_lp(&lp).unwrap();
        prop_assert!(sol.is_optimal());
        let y = &sol.duals;
        let yb: Rational = lp.constraints.iter().zip(y).map(|(r, y)| &r.rhs * y).sum();
        prop_assert_eq!(&yb, &sol.objective);
        for (r, y) in lp.constraints.iter().zip(y) {
            prop_assert!(!y.is_negative());
            let ax: Rational = r.coeffs.iter().zip(&sol.values).map(|(a, x)| a * x).sum();
            prop_assert!((&r.rhs - ax) * y == Rational::zero());
        }
        for j in 0..lp.num_vars() {
            let reduced = &lp.objective[j] - lp.constraints.iter().zip(y).map(|(r, y)| &r.coeffs[j] * y).sum::<Rational>();
            prop_assert!(!reduced.is_positive());
            prop_assert!(&reduced * &sol.values[j] == Rational::zero());
        }
    }

    #[test]
    fn pipeline_output_verifies(seed in any::<u64>()) {
        let mut rng = generate::rng(seed);
        let nodes = rng.gen_range(2..=7);
        let back_arcs = rng.gen_range(0..3);
        let system = generate::random_digraph(&mut rng, nodes, 0.35, back_arcs).unwrap();
        let (rho, mu) = generate::random_marginals(&mut rng, &system, 5, 0.5, StarTarget::Holds).unwrap();
        let req = Requirement::Affine(mu.clone());
        let out = decomp::decompose_affine(&system, &rho, &mu, decomp::LabelRoute::Digraph).unwrap();
        prop_assert!(out.pre_lift.len() <= 2 * system.len() + 1);
        let report = decomp::verify_decomposition(&out.decomposition, &rho, &req, &system).unwrap();
        prop_assert!(report.passed(), "{:?}", report);
    }

    #[test]
    fn both_label_routes_verify_on_dags(seed in any::<u64>()) {
        let mut rng = generate::rng(seed);
        let nodes = rng.gen_range(2..=6);
        let system = generate::random_dag(&mut rng, nodes, 0.4).unwrap();
        let (rho, mu) = generate::random_marginals(&mut rng, &system, 4, 0.5, StarTarget::Tight).unwrap();
        let req = Requirement::Affine(mu.clone());
        for route in [decomp::LabelRoute::Digraph, decomp::LabelRoute::Abstract] {
            let out = decomp::decompose_affine(&system, &rho, &mu, route).unwrap();
            prop_assert!(decomp::verify_decomposition(&out.decomposition, &rho, &req, &system).unwrap().passed());
        }
    }

    #[test]
    fn lift_keeps_coverage_and_hits_targets(seed in any::<u64>()) {
        let mut rng = generate::rng(seed);
        let system = generate::random_explicit_network(&mut rng, 8).unwrap();
        let n = system.len();
        let (rho_small, mu) = generate::random_marginals(&mut rng, &system, 4, 0.3, StarTarget::Tight).unwrap();
        let small = decomp::decompose_affine(&system, &rho_small, &mu, decomp::LabelRoute::Abstract).unwrap().decomposition;
        let rho: Vec<Rational> = rho_small
            .as_slice()
            .iter()
            .map(|r| r + (Rational::one() - r) * generate::small_rational(&mut rng, 3))
            .collect();
        let rho = Marginals::new(rho).unwrap();
        let big = decomp::extend_decomposition(&small, &rho_small, &rho).unwrap();
        prop_assert_eq!(big.marginals(n), rho.as_slice().to_vec());
        prop_assert_eq!(big.total_mass(), Rational::one());
        for p in system.enumerate_members(ENUMERATION_LIMIT).unwrap() {
            prop_assert!(big.coverage(&p) >= small.coverage(&p));
        }
    }

    #[test]
    fn raising_a_cost_never_lowers_the_optimum(seed in any::<u64>()) {
        let mut rng = generate::rng(seed);
        let nodes = rng.gen_range(2..=8);
        let system = generate::random_digraph(&mut rng, nodes, 0.3, 2).unwrap();
        let gamma: Vec<Rational> = (0..system.len()).map(|_| generate::small_rational(&mut rng, 4)).collect();
        let (_, base) = asp::shortest_path(&system, &gamma).unwrap().unwrap();
        let mut raised = gamma.clone();
        let e = rng.gen_range(0..system.len());
        raised[e] += ratio(1, 3);
        let (_, after) = asp::shortest_path(&system, &raised).unwrap().unwrap();
        prop_assert!(after >= base);
    }

    #[test]
    fn hasse_paths_and_chains_correspond(seed in any::<u64>()) {
        let mut rng = generate::rng(seed);
        let n = rng.gen_range(1..=6);
        let poset = generate::random_poset(&mut rng, n, 0.4).unwrap();
        let hasse = conservation::hasse_diagram(&poset).unwrap();
        let chains = poset.enumerate_members(ENUMERATION_LIMIT).unwrap();
        let paths = hasse.system.enumerate_members(ENUMERATION_LIMIT).unwrap();
        prop_assert_eq!(chains.len(), paths.len());
        for c in &chains {
            let p = hasse.path_of(c).unwrap();
            prop_assert_eq!(&hasse.chain_of(&p).unwrap(), c);
        }
    }

    #[test]
    fn planted_weights_are_recovered(seed in any::<u64>()) {
        let mut rng = generate::rng(seed);
        let nodes = rng.gen_range(2..=7);
        let system = generate::random_dag(&mut rng, nodes, 0.35).unwrap();
        let members = system.enumerate_members(ENUMERATION_LIMIT).unwrap();
        let mut planted: Vec<Rational> = (0..system.len()).map(|_| generate::small_rational(&mut rng, 4)).collect();
        let heaviest = members.iter().map(|p| p.cost(&planted)).max().unwrap();
        if heaviest > Rational::one() {
            planted.iter_mut().for_each(|m| *m = &*m / &heaviest);
        }
        let table = RequirementTable::from_entries(members.iter().map(|p| (p.sorted_ids(), Rational::one() - p.cost(&planted)))).unwrap();
        prop_assert!(conservation::check_conservation(&system, &table).unwrap().holds);
        let shift = conservation::compute_mu(&system, &table).unwrap();
        for p in &members {
            prop_assert_eq!(Rational::one() - p.cost(&shift.mu), table.value(p).unwrap());
        }
        prop_assert!(shift.mu.iter().all(|m| !m.is_negative() && *m <= Rational::one()));
    }

    #[test]
    fn instances_round_trip_through_json(seed in any::<u64>()) {
        let mut rng = generate::rng(seed);
        let system = generate::random_explicit_network(&mut rng, 8).unwrap();
        let (rho, mu) = generate::random_marginals(&mut rng, &system, 7, 0.5, StarTarget::Raw).unwrap();
        let file = io::instance_file(&system, &rho, &Requirement::Affine(mu.clone())).unwrap();
        let text = serde_json::to_string(&file).unwrap();
        let back = io::parse_instance(&text).unwrap();
        prop_assert_eq!(back.rho, rho);
        let Requirement::Affine(mu2) = back.requirement else { panic!("affine in, affine out") };
        prop_assert_eq!(mu2, mu);
        prop_assert_eq!(back.system.enumerate_members(ENUMERATION_LIMIT).unwrap(), system.enumerate_members(ENUMERATION_LIMIT).unwrap());
    }

    #[test]
    fn brute_force_agrees_with_the_labels_on_small_dags(seed in any::<u64>()) {
        let mut rng = generate::rng(seed);
        let nodes = rng.gen_range(2..=4);
        let system = generate::random_dag(&mut rng, nodes, 0.3).unwrap();
        prop_assume!(system.len() <= 10);
        let (rho, mu) = generate::random_marginals(&mut rng, &system, 4, 0.5, StarTarget::Raw).unwrap();
        let req = Requirement::Affine(mu.clone());
        let labels = pipeline::decompose(&system, &rho, &req, Method::Digraph).is_ok();
        let lp = decomp::brute_force_feasibility(&system, &req, &rho).unwrap();
        prop_assert_eq!(labels, lp.is_some());
        if let Some(x) = lp {
            prop_assert!(decomp::verify_decomposition(&x, &rho, &req, &system).unwrap().passed());
        }
    }

    #[test]
    fn sampling_stays_in_the_support(seed in any::<u64>()) {
        let x = Decomposition::from_weighted([(vec![0], ratio(1, 3)), (vec![1, 2], ratio(1, 2)), (vec![], ratio(1, 6))]).unwrap();
        let mut rng = generate::rng(seed);
        for _ in 0..8 {
            let s = x.sample(&mut rng);
            prop_assert!(x.support().iter().any(|(set, _)| *set == s));
        }
    }
}
