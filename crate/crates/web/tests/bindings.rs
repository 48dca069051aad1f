use mdecomp_web::{decompose, decompose_report, shortest_path_report, solve_game, solve_game_report};
use serde_json::Value;

const DAG: &str = r#"{
    "elements": ["s", "m", "t"],
    "system": {"type": "digraph", "arcs": [["s","m"],["m","t"],["s","t"]], "source": "s", "sink": "t"},
    "rho": {"s": "1/2", "m": "1/2", "s->t": "1/4"},
    "mu": {"s->t": "1/4"}
}"#;

const GAME: &str = r#"{
    "elements": ["s", "m", "t"],
    "system": {"type": "digraph", "arcs": [["s","m"],["m","t"],["s","t"]], "source": "s", "sink": "t"},
    "u": {"s": "2", "m": "1", "t": "2", "s->m": "1", "m->t": "1", "s->t": "1"},
    "c": {"s->t": "1/4"},
    "d": {"s": "1/2", "m": "1/2", "t": "1/2", "s->m": "1/2", "m->t": "1/2", "s->t": "1/2"}
}"#;

#[test]
fn digraph_decomposition_verifies() {
    let v = decompose_report(DAG, "auto", true).unwrap();
    assert_eq!(v["method"], "digraph");
    assert_eq!(v["verification"]["passed"], true);
    assert!(v["trace"]["alpha"].is_object());
}

#[test]
fn shortest_path_defaults_to_star_weights() {
    // Both members weigh exactly 1 under rho + mu; the tie goes to the smaller id.
    let v = shortest_path_report(DAG, "", false).unwrap();
    assert_eq!(v["cost"], "1");
    let custom = shortest_path_report(DAG, r#"{"m": "3"}"#, false).unwrap();
    assert_eq!(custom["cost"], "0");
    assert_eq!(custom["path"], serde_json::json!(["s", "s->t", "t"]));
}

#[test]
fn game_is_verified() {
    let v = solve_game_report(GAME).unwrap();
    assert_eq!(v["verified"], true);
    assert!(v["sigmaI"]["support"].is_array());
}

#[test]
fn failures_are_json_objects() {
    let bad: Value = serde_json::from_str(&decompose("{", "auto", false)).unwrap();
    assert!(bad["error"].as_str().unwrap().contains("parse"));
    let method: Value = serde_json::from_str(&decompose(DAG, "simplex", false)).unwrap();
    assert!(method["error"].is_string());
    let not_game: Value = serde_json::from_str(&solve_game(DAG)).unwrap();
    assert!(not_game["error"].as_str().unwrap().contains("\"u\""));
}

#[test]
fn infeasible_marginals_carry_a_labelled_witness() {
    let thin = DAG.replace(r#""s": "1/2""#, r#""s": "0""#);
    let v = decompose_report(&thin, "auto", false).unwrap_err();
    assert_eq!(v["infeasible"], true);
    assert_eq!(v["witness"]["path"][0], "s");
}
