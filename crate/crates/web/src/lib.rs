//! Browser bindings for the xorfold demo page in `www/`.
//!
//! Each export has a plain Rust twin returning `Result<String, String>` so the
//! logic is tested natively; the wasm wrappers only convert the error.

use serde_json::json;
use wasm_bindgen::prelude::*;
use xorfold::analysis::simulate;
use xorfold::math::{self, iterate_p, k_bound, leak, leak_rate};
use xorfold::sim::SchemePreset;
use xorfold::{Epsilon, FoldCount, GuessProbability, KeyRequest, LeakFraction};

/// Keeps a single click from freezing the tab.
pub const MAX_DEMO_FINAL_BITS: usize = 200_000;

fn err(e: impl ToString) -> String {
    e.to_string()
}

/// Fold plan plus the trajectory `P^0(p) .. P^k(p)` for plotting.
pub fn plan_json(p: f64, epsilon: f64) -> Result<String, String> {
    let p = GuessProbability::new(p).map_err(err)?;
    let eps = Epsilon::new(epsilon).map_err(err)?;
    let plan = math::plan(p, eps).map_err(err)?;
    let k = u64::from(plan.k.get());
    // a couple of extra steps past k so the plot shows the flattening
    let trajectory: Vec<f64> = (0..=k + 2).map(|l| iterate_p(p, l).value()).collect();
    Ok(json!({
        "k": plan.k.get(),
        "blockSize": plan.block_size,
        "pFinal": plan.p_final.value(),
        "residualLeak": plan.residual_leak.value(),
        "kBound": k_bound(p, eps),
        "trajectory": trajectory,
    })
    .to_string())
}

/// Leak fraction at `p`, optionally as a rate for a raw bit rate `fs`.
pub fn leak_json(p: f64, fs: Option<f64>) -> Result<String, String> {
    let value = leak(p).map_err(err)?.value();
    let rate = fs.map(|fs| leak_rate(fs, p)).transpose().map_err(err)?;
    Ok(json!({ "p": p, "leak": value, "rate": rate }).to_string())
}

/// Guess probability whose leak equals `target`.
pub fn invert_leak_json(target: f64) -> Result<String, String> {
    let t = LeakFraction::new(target).map_err(err)?;
    Ok(json!({ "target": target, "p": math::invert_leak(t) }).to_string())
}

/// `(p, leak)` samples over `[0.5, 1]` for the leak curve.
pub fn leak_curve_json(points: usize) -> Result<String, String> {
    if points < 2 {
        return Err("need at least 2 points".into());
    }
    let curve: Result<Vec<[f64; 2]>, _> = (0..points)
        .map(|i| {
            let p = 0.5 + 0.5 * i as f64 / (points - 1) as f64;
            leak(p).map(|l| [p, l.value()])
        })
        .collect();
    Ok(json!(curve.map_err(err)?).to_string())
}

/// One simulated distillation; returns the same JSON as `xorfold simulate --report`.
pub fn simulate_json(p: f64, fidelity: f64, k: u32, final_bits: usize, seed: u64) -> Result<String, String> {
    if final_bits > MAX_DEMO_FINAL_BITS {
        return Err(format!("final bits capped at {MAX_DEMO_FINAL_BITS} in the demo"));
    }
    let preset = SchemePreset::custom(p, fidelity).map_err(err)?;
    let req = KeyRequest::new(final_bits, FoldCount::new(k).map_err(err)?).map_err(err)?;
    Ok(simulate(&preset, req, seed, 1).map_err(err)?.to_json())
}

fn js(r: Result<String, String>) -> Result<String, JsError> {
    r.map_err(|e| JsError::new(&e))
}

#[wasm_bindgen]
pub fn plan(p: f64, epsilon: f64) -> Result<String, JsError> {
    js(plan_json(p, epsilon))
}

#[wasm_bindgen(js_name = leakAt)]
pub fn leak_at(p: f64, fs: Option<f64>) -> Result<String, JsError> {
    js(leak_json(p, fs))
}

#[wasm_bindgen(js_name = invertLeak)]
pub fn invert_leak(target: f64) -> Result<String, JsError> {
    js(invert_leak_json(target))
}

#[wasm_bindgen(js_name = leakCurve)]
pub fn leak_curve(points: usize) -> Result<String, JsError> {
    js(leak_curve_json(points))
}

#[wasm_bindgen(js_name = simulate)]
pub fn simulate_once(p: f64, fidelity: f64, k: u32, final_bits: usize, seed: u64) -> Result<String, JsError> {
    js(simulate_json(p, fidelity, k, final_bits, seed))
}
