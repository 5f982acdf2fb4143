//! Browser bindings: emptiness frequencies over an alpha grid, the truncated
//! inverse zeta curve, and a periodic tiling drawn from a sampled shift.
//! Every export returns a JSON string.

use serde_json::{json, Value};
use wasm_bindgen::prelude::*;

use sftlab::analysis::{decide_empty, Verdict};
use sftlab::ensemble::{sample, EnsembleParams};
use sftlab::experiments::{run_emptiness_experiment, ExperimentConfig, Rows};
use sftlab::geometry::Dim;
use sftlab::orbits::orbit_size_budget;
use sftlab::patterns::Alphabet;
use sftlab::zeta::zeta_inverse;
use sftlab::SftError;

fn shape(d: u32, alphabet: u32) -> Result<(Dim, Alphabet), SftError> {
    Ok((Dim::new(d as usize)?, Alphabet::new(alphabet)?))
}

fn grid(points: u32, hi: f64) -> Vec<f64> {
    let m = points.max(2);
    (0..m).map(|i| hi * i as f64 / (m - 1) as f64).collect()
}

fn respond(r: Result<Value, SftError>) -> Result<String, JsValue> {
    r.map(|v| v.to_string()).map_err(|e| JsValue::from_str(&json!({"error": e.to_string(), "kind": e.kind()}).to_string()))
}

fn emptiness_curve_inner(d: u32, alphabet: u32, n: u32, points: u32, trials: u32, seed: u64) -> Result<Value, SftError> {
    let (dim, alphabet) = shape(d, alphabet)?;
    let alphas = grid(points, 1.0);
    let mut cfg = ExperimentConfig::new(alphabet, dim, n as usize, alphas, trials as u64, seed);
    cfg.workers = Some(1);
    cfg.orbit_max = orbit_size_budget(dim).min(12) as u64;
    let r = run_emptiness_experiment(&cfg)?;
    let Rows::Emptiness(rows) = r.rows else { unreachable!("emptiness rows") };
    let rows: Vec<Value> = rows
        .iter()
        .map(|r| json!({"alpha": r.alpha, "empirical": r.p_empty, "theory": r.theory, "unknown": r.unknown_fraction, "ci95": r.ci95}))
        .collect();
    Ok(json!({"threshold": 1.0 / alphabet.size() as f64, "rows": rows}))
}

/// Empirical emptiness frequency and truncated `1/zeta` on `points` alphas in `[0, 1]`.
#[wasm_bindgen]
pub fn emptiness_curve(d: u32, alphabet: u32, n: u32, points: u32, trials: u32, seed: u64) -> Result<String, JsValue> {
    respond(emptiness_curve_inner(d, alphabet, n, points, trials, seed))
}

fn zeta_curve_inner(d: u32, alphabet: u32, j_max: u32, points: u32) -> Result<Value, SftError> {
    let (dim, alphabet) = shape(d, alphabet)?;
    let hi = 1.0 / alphabet.size() as f64;
    let rows = grid(points, hi)
        .into_iter()
        .map(|a| zeta_inverse(alphabet, dim, a, Some(j_max as u64)).map(|z| json!({"alpha": a, "value": z.value, "tail_bound": z.tail_bound})))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(json!({"threshold": hi, "rows": rows}))
}

/// Truncated inverse zeta product on `points` alphas in `[0, 1/|A|]`.
#[wasm_bindgen]
pub fn zeta_curve(d: u32, alphabet: u32, j_max: u32, points: u32) -> Result<String, JsValue> {
    respond(zeta_curve_inner(d, alphabet, j_max, points))
}

fn sample_periodic_tile_inner(alphabet: u32, n: u32, alpha: f64, seed: u64, side: u32, max_trials: u32) -> Result<Value, SftError> {
    let (dim, alphabet) = shape(2, alphabet)?;
    let params = EnsembleParams::new(alphabet, dim, n as usize, alpha, seed)?;
    let mut verdicts = json!({"empty": 0, "unknown": 0});
    for trial in 0..max_trials.max(1) as u64 {
        let omega = sample(&params, trial)?;
        let v = decide_empty(&omega, 6, 6)?;
        match (v.verdict, v.orbit()) {
            (Verdict::NonEmpty, Some(orbit)) => {
                let side = side.clamp(1, 256) as usize;
                let window = orbit.window_pattern([0; 3], &[side, side]);
                let cells: Vec<Vec<u8>> = (0..side).map(|x| (0..side).map(|y| window.get(&[x as i64, y as i64, 0])).collect()).collect();
                return Ok(json!({
                    "trial": trial,
                    "orbit_size": orbit.size,
                    "allowed": omega.count_allowed(),
                    "skipped": verdicts,
                    "cells": cells,
                }));
            }
            (Verdict::Empty, _) => verdicts["empty"] = json!(verdicts["empty"].as_u64().unwrap() + 1),
            _ => verdicts["unknown"] = json!(verdicts["unknown"].as_u64().unwrap() + 1),
        }
    }
    Err(SftError::Resource(format!("no periodic certificate within {max_trials} trials")))
}

/// First trial whose two-dimensional shift has a periodic certificate,
/// rendered as a `side x side` window of the periodic configuration.
#[wasm_bindgen]
pub fn sample_periodic_tile(alphabet: u32, n: u32, alpha: f64, seed: u64, side: u32, max_trials: u32) -> Result<String, JsValue> {
    respond(sample_periodic_tile_inner(alphabet, n, alpha, seed, side, max_trials))
}
