use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use mdecomp::io;
use mdecomp::rational::{self, ratio};
use serde_json::Value;

fn data(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/data").join(name)
}

fn scratch(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_TARGET_TMPDIR")).join(name)
}

fn mdecomp(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_mdecomp")).args(args).output().expect("binary runs")
}

fn json(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).expect("stdout is JSON")
}

fn generate(args: &[&str], name: &str) -> PathBuf {
    let out = mdecomp(args);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let path = scratch(name);
    std::fs::write(&path, &out.stdout).unwrap();
    path
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn decompose_single_path() {
    let out = mdecomp(&["decompose", s(&data("single_path.json"))]);
    assert_eq!(out.status.code(), Some(0));
    let v = json(&out);
    let support = v["support"].as_array().unwrap();
    assert_eq!(support.len(), 3);
    assert!(support.iter().all(|e| e["p"] == "1/3" && e["set"].as_array().unwrap().len() == 1));
    assert_eq!(v["verification"]["passed"], true);
}

#[test]
fn emitted_decomposition_reparses_exactly() {
    let inst_path = generate(&["--seed", "4", "generate", "dag", "--size", "6"], "reparse_dag.json");
    let text = std::fs::read_to_string(&inst_path).unwrap();
    let inst = io::parse_instance(&text).unwrap();
    let direct =
        mdecomp::pipeline::decompose(&inst.system, &inst.rho, &inst.requirement, mdecomp::pipeline::Method::Auto)
            .unwrap()
            .decomposition;
    let out = mdecomp(&["decompose", s(&inst_path)]);
    assert_eq!(out.status.code(), Some(0));
    let parsed = io::decomposition_from_value(&inst.system, &json(&out)).unwrap();
    assert_eq!(parsed, direct);
}

#[test]
fn triangle_exits_two_with_witness() {
    let path = generate(&["generate", "triangle"], "triangle.json");
    let out = mdecomp(&["decompose", s(&path)]);
    assert_eq!(out.status.code(), Some(2));
    let v = json(&out);
    assert_eq!(v["infeasible"], true);
    assert_eq!(v["witness"]["anyDecompositionExists"], false);
    assert_eq!(v["witness"]["y"]["2"], "1/2");
}

#[test]
fn covering_violation_reports_the_path() {
    let text = std::fs::read_to_string(data("single_path.json")).unwrap().replace("\"1/3\"", "\"1/4\"");
    let path = scratch("thin_path.json");
    std::fs::write(&path, text).unwrap();
    let out = mdecomp(&["decompose", s(&path)]);
    assert_eq!(out.status.code(), Some(2));
    let v = json(&out);
    assert_eq!(v["witness"]["path"], serde_json::json!(["s", "a", "t"]));
    assert_eq!(v["witness"]["covered"], "3/4");
}

#[test]
fn tampered_decomposition_fails_verification() {
    let out = mdecomp(&["verify", s(&data("single_path.json")), s(&data("single_path_tampered.json"))]);
    assert_eq!(out.status.code(), Some(2));
    let v = json(&out);
    assert_eq!(v["passed"], false);
    assert_eq!(v["minSlack"], "-2/3");
    assert_eq!(v["worstPath"], serde_json::json!(["s", "a", "t"]));
}

#[test]
fn verify_accepts_own_output() {
    let inst = generate(&["--seed", "9", "generate", "explicit", "--size", "8"], "verify_inst.json");
    let x = generate(&["decompose", s(&inst)], "verify_x.json");
    let out = mdecomp(&["verify", s(&inst), s(&x)]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(json(&out)["passed"], true);
}

#[test]
fn generation_is_byte_reproducible() {
    for kind in ["dag", "poset", "explicit", "game", "nae3sat"] {
        let a = mdecomp(&["--seed", "7", "generate", kind]);
        let b = mdecomp(&["--seed", "7", "generate", kind]);
        assert_eq!(a.status.code(), Some(0), "{kind}");
        assert_eq!(a.stdout, b.stdout, "{kind}");
    }
}

#[test]
fn shortest_path_with_explicit_costs() {
    let costs = scratch("costs.json");
    std::fs::write(&costs, r#"{"s": "1", "a": "2", "t": "3"}"#).unwrap();
    let out = mdecomp(&["shortest-path", s(&data("single_path.json")), "--costs", s(&costs), "--emit-trace"]);
    assert_eq!(out.status.code(), Some(0));
    let v = json(&out);
    assert_eq!(v["cost"], "6");
    assert_eq!(v["path"], serde_json::json!(["s", "a", "t"]));
    assert!(!v["trace"].as_array().unwrap().is_empty());
}

#[test]
fn game_output_has_the_documented_fields() {
    let path = generate(&["--seed", "3", "generate", "game", "--size", "4"], "game.json");
    let out = mdecomp(&["solve-game", s(&path)]);
    assert_eq!(out.status.code(), Some(0));
    let v = json(&out);
    assert_eq!(v["verified"], true);
    assert!(v["flow"].is_array());
    assert!(v["sigmaI"]["support"].is_array());
    let value = rational::parse(v["value"].as_str().unwrap()).unwrap();
    let inst = io::parse_instance_file(&std::fs::read_to_string(&path).unwrap()).unwrap().build_game().unwrap();
    assert_eq!(value, mdecomp::game::full_lp_value(&inst).unwrap());
}

#[test]
fn poset_reduction_and_decomposition() {
    let out = mdecomp(&["reduce-conservation", s(&data("bipartite_poset.json"))]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let v = json(&out);
    assert_eq!(v["hasse"]["virtualSource"], true);
    assert_eq!(v["exhaustive"], true);
    let mu: Vec<_> =
        v["mu"].as_object().unwrap().values().map(|x| rational::parse(x.as_str().unwrap()).unwrap()).collect();
    assert_eq!(mu, vec![ratio(1, 2), ratio(1, 2)]);
    assert!(!v["decomposition"]["support"].as_array().unwrap().is_empty());
}

#[test]
fn nae3sat_reduction_through_the_cli() {
    let path = generate(&["--seed", "1", "generate", "nae3sat", "--size", "4", "--clauses", "5"], "nae.json");
    let out = mdecomp(&["decompose", s(&path)]);
    let code = out.status.code();
    assert!(code == Some(0) || code == Some(2));
    assert_eq!(json(&out)["method"].as_str().is_some(), code == Some(0));
}

#[test]
fn sampling_is_seeded() {
    let a = mdecomp(&["--seed", "5", "sample", s(&data("single_path.json")), "--count", "4"]);
    let b = mdecomp(&["--seed", "5", "sample", s(&data("single_path.json")), "--count", "4"]);
    assert_eq!(a.status.code(), Some(0));
    assert_eq!(a.stdout, b.stdout);
    assert_eq!(json(&a)["samples"].as_array().unwrap().len(), 4);
}

#[test]
fn usage_errors_exit_one() {
    assert_eq!(mdecomp(&["decompose", "/nonexistent.json"]).status.code(), Some(1));
    assert_eq!(mdecomp(&["frobnicate"]).status.code(), Some(1));
    assert_eq!(mdecomp(&["decompose", s(&data("single_path.json")), "--method", "simplex"]).status.code(), Some(1));
    let out = mdecomp(&["decompose", s(&data("single_path.json")), "--guard-max-elements", "2"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("guard"));
}

#[test]
fn text_format_is_readable() {
    let out = mdecomp(&["--format", "text", "decompose", s(&data("single_path.json"))]);
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.contains("method: abstract"));
    assert!(text.contains("p: 1/3"));
}
