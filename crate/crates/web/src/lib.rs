//! WebAssembly bindings for the browser demo in `www/`.
//!
//! Each export takes and returns JSON strings. The `*_json` functions hold
//! the logic and are plain Rust so they can be tested natively.

use pdboost::boost::{run, LineSearch, RunConfig};
use pdboost::linesearch::EXACT_TOL;
use pdboost::losses::{LossKind, LossSpec};
use pdboost::structure::analyze;
use pdboost::{fixtures, BoostInstance};
use serde::Serialize;
use wasm_bindgen::prelude::*;

/// Iteration cap for demo runs, to keep the page responsive.
pub const MAX_DEMO_ITERS: u32 = 5000;

#[derive(Serialize)]
struct RunOutput {
    status: String,
    objectives: Vec<f64>,
    lambda: Vec<f64>,
    training_errors: usize,
}

#[derive(Serialize)]
struct CurveOutput {
    t: Vec<usize>,
    suboptimality: Vec<f64>,
    bound: Vec<f64>,
}

fn line_search(name: &str) -> Result<LineSearch, String> {
    match name {
        "wolfe" => Ok(LineSearch::Wolfe(Default::default())),
        "closed" => Ok(LineSearch::ClosedForm),
        "exact" => Ok(LineSearch::Exact(EXACT_TOL)),
        other => Err(format!("unknown line search {other:?}")),
    }
}

/// Runs Boost and returns the objective after every step.
pub fn run_json(instance: &str, loss: &str, search: &str, iters: u32) -> Result<String, String> {
    let inst = BoostInstance::from_json(instance).map_err(|e| e.to_string())?;
    let kind: LossKind = loss.parse().map_err(|e: pdboost::Error| e.to_string())?;
    let spec = LossSpec::new(kind, inst.m()).map_err(|e| e.to_string())?;
    let cfg = RunConfig {
        max_iters: iters.min(MAX_DEMO_ITERS) as usize,
        line_search: line_search(search)?,
        ..Default::default()
    };
    let trace = run(&inst, &spec, &cfg).map_err(|e| e.to_string())?;
    let objectives = (0..=trace.records.len())
        .map(|t| trace.objective_at(t))
        .collect();
    let lambda = trace.final_state.lambda;
    let out = RunOutput {
        status: format!("{:?}", trace.status),
        objectives,
        training_errors: inst
            .training_error(&lambda)
            .map_err(|e| e.to_string())?
            .errors,
        lambda,
    };
    serde_json::to_string(&out).map_err(|e| e.to_string())
}

/// Structure report of an instance.
pub fn analyze_json(instance: &str) -> Result<String, String> {
    let inst = BoostInstance::from_json(instance).map_err(|e| e.to_string())?;
    let report = analyze(&inst).map_err(|e| e.to_string())?;
    serde_json::to_string(&report).map_err(|e| e.to_string())
}

/// Suboptimality of exact-search logistic Boost on the 3×2 mixed instance
/// next to the `1/(8t)` lower bound.
pub fn lower_bound_json(iters: u32) -> Result<String, String> {
    let s = fixtures::s();
    let spec = LossSpec::new(LossKind::Logistic, s.m()).map_err(|e| e.to_string())?;
    let cfg = RunConfig {
        max_iters: iters.clamp(1, MAX_DEMO_ITERS) as usize,
        line_search: LineSearch::Exact(EXACT_TOL),
        ..Default::default()
    };
    let trace = run(&s, &spec, &cfg).map_err(|e| e.to_string())?;
    let optimum = 2.0 * std::f64::consts::LN_2;
    let t: Vec<usize> = (1..=trace.records.len()).collect();
    let out = CurveOutput {
        suboptimality: t.iter().map(|&k| trace.objective_at(k) - optimum).collect(),
        bound: t.iter().map(|&k| 1.0 / (8.0 * k as f64)).collect(),
        t,
    };
    serde_json::to_string(&out).map_err(|e| e.to_string())
}

/// JSON of a named fixture, for the page's preset menu.
pub fn fixture_json(name: &str) -> Result<String, String> {
    fixtures::by_name(name)
        .map(|f| f.instance.to_json())
        .ok_or_else(|| format!("unknown fixture {name:?}"))
}

#[wasm_bindgen]
pub fn boost_run(instance: &str, loss: &str, search: &str, iters: u32) -> Result<String, JsValue> {
    run_json(instance, loss, search, iters).map_err(|e| JsValue::from_str(&e))
}

#[wasm_bindgen]
pub fn structure(instance: &str) -> Result<String, JsValue> {
    analyze_json(instance).map_err(|e| JsValue::from_str(&e))
}

#[wasm_bindgen]
pub fn lower_bound_curve(iters: u32) -> Result<String, JsValue> {
    lower_bound_json(iters).map_err(|e| JsValue::from_str(&e))
}

#[wasm_bindgen]
pub fn fixture(name: &str) -> Result<String, JsValue> {
    fixture_json(name).map_err(|e| JsValue::from_str(&e))
}
