//! Browser bindings. Each export takes instance JSON text and returns a JSON
//! report; failures come back as a JSON object with an `"error"` key, so the
//! page never has to catch.

use serde_json::{json, Value};
use wasm_bindgen::prelude::*;

use mdecomp::io;
use mdecomp::pipeline::Method;
use mdecomp::{report, Error};

fn failure(e: Error) -> Value {
    io::error_json(None, &e)
}

fn finish(v: Result<Value, Value>) -> String {
    match v {
        Ok(v) | Err(v) => serde_json::to_string_pretty(&v).expect("values serialize"),
    }
}

pub fn decompose_report(instance: &str, method: &str, trace: bool) -> Result<Value, Value> {
    let method = Method::parse(method).ok_or_else(|| json!({ "error": format!("unknown method {method:?}") }))?;
    let inst = io::parse_instance(instance).map_err(failure)?;
    report::decompose(&inst, method, trace).map_err(|e| match e {
        Error::NotWeakMfmc => report::not_mfmc_witness(&inst),
        e => io::error_json(Some(&inst.system), &e),
    })
}

/// Costs default to `ρ + μ` when `costs` is blank.
pub fn shortest_path_report(instance: &str, costs: &str, trace: bool) -> Result<Value, Value> {
    let inst = io::parse_instance(instance).map_err(failure)?;
    let gamma = if costs.trim().is_empty() {
        report::default_costs(&inst)
    } else {
        let map = serde_json::from_str(costs).map_err(|e| json!({ "error": format!("costs: {e}") }))?;
        io::vector_from_map(&inst.system, &map).map_err(failure)?
    };
    report::shortest_path(&inst.system, &gamma, trace).map_err(failure)
}

pub fn solve_game_report(instance: &str) -> Result<Value, Value> {
    let game = io::parse_instance_file(instance).and_then(|f| f.build_game()).map_err(failure)?;
    report::solve_game(&game).map_err(|e| io::error_json(Some(&game.system), &e))
}

#[wasm_bindgen]
pub fn decompose(instance: &str, method: &str, trace: bool) -> String {
    finish(decompose_report(instance, method, trace))
}

#[wasm_bindgen(js_name = shortestPath)]
pub fn shortest_path(instance: &str, costs: &str, trace: bool) -> String {
    finish(shortest_path_report(instance, costs, trace))
}

#[wasm_bindgen(js_name = solveGame)]
pub fn solve_game(instance: &str) -> String {
    finish(solve_game_report(instance))
}
