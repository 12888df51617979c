//! Browser bindings: concentration curves, interval detection, and a seeded
//! histogram of `s_min/√N`. Each operation has a plain Rust twin returning
//! `Result<String, String>` so it can be tested natively.

use serde_json::json;
use wasm_bindgen::prelude::*;

use ssv_core::bounds::ConstantsConfig;
use ssv_core::detect::detect_on_law;
use ssv_core::dist::{select_shift_and_case, EntryDistribution};
use ssv_core::harness::{run_trials, ExperimentConfig, ShiftSource};

/// Keeps the page responsive; the harness itself allows more.
pub const MAX_DEMO_CELLS: usize = 200 * 200 * 200;

fn law(spec: &str) -> Result<EntryDistribution, String> {
    EntryDistribution::parse(spec).map_err(|e| e.to_string())
}

/// `[{alpha, q}]` on `points` log-spaced radii in `[lo, hi]`.
pub fn concentration_curve_json(spec: &str, lo: f64, hi: f64, points: usize) -> Result<String, String> {
    if !(lo > 0.0 && hi > lo) || points < 2 {
        return Err(format!("need 0 < lo < hi and at least two points, got [{lo}, {hi}] with {points}"));
    }
    let dist = law(spec)?;
    let l = dist.law();
    let step = (hi / lo).ln() / (points - 1) as f64;
    let curve: Vec<_> = (0..points)
        .map(|k| {
            let alpha = lo * (step * k as f64).exp();
            json!({ "alpha": alpha, "q": l.concentration(alpha) })
        })
        .collect();
    Ok(json!({ "dist": spec, "curve": curve }).to_string())
}

pub fn detect_json(spec: &str, beta: f64, rows: usize) -> Result<String, String> {
    let dist = law(spec)?;
    let scaled = dist
        .calibrate_scale(beta)
        .ok_or_else(|| format!("no scale reaches Q(a/alpha,1) <= {}", 1.0 - beta))?;
    let case = select_shift_and_case(&scaled, beta, rows).map_err(|e| e.to_string())?;
    let det = detect_on_law(&scaled.normalized_law(), case.z, case.gamma, rows, &ConstantsConfig::default()).map_err(|e| e.to_string())?;
    Ok(json!({
        "alpha": scaled.scale,
        "case": case,
        "detection": det,
        "gap": det.gap(),
        "mass_floor": det.mass_floor(case.gamma),
    })
    .to_string())
}

/// Equal-width histogram of `s_min/√N` plus the run's percentiles.
pub fn smin_histogram_json(spec: &str, rows: usize, cols: usize, trials: usize, seed: u64, bins: usize) -> Result<String, String> {
    if bins == 0 {
        return Err("bins must be positive".into());
    }
    if rows.saturating_mul(cols).saturating_mul(trials) > MAX_DEMO_CELLS {
        return Err(format!("N*n*trials exceeds the demo limit {MAX_DEMO_CELLS}"));
    }
    let config = ExperimentConfig {
        dist: law(spec)?,
        delta: 2.0,
        sizes: vec![(rows, cols)],
        trials,
        master_seed: seed,
        shift_source: ShiftSource::Zero,
        u_grid: vec![0.1],
        beta: 0.5,
    };
    let (records, summary) = run_trials(&config).map_err(|e| e.to_string())?;
    let values: Vec<f64> = records.iter().map(|r| r.normalized).collect();
    let lo = values.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let width = if hi > lo { (hi - lo) / bins as f64 } else { 1.0 };
    let mut counts = vec![0usize; bins];
    for v in &values {
        // the maximum lands in the last bin
        let k = (((v - lo) / width) as usize).min(bins - 1);
        counts[k] += 1;
    }
    Ok(json!({
        "lo": lo,
        "width": width,
        "counts": counts,
        "percentiles": summary.sizes[0].percentiles,
    })
    .to_string())
}

#[wasm_bindgen]
pub fn concentration_curve(spec: &str, lo: f64, hi: f64, points: usize) -> Result<String, JsValue> {
    concentration_curve_json(spec, lo, hi, points).map_err(|e| JsValue::from_str(&e))
}

#[wasm_bindgen]
pub fn detect(spec: &str, beta: f64, rows: usize) -> Result<String, JsValue> {
    detect_json(spec, beta, rows).map_err(|e| JsValue::from_str(&e))
}

#[wasm_bindgen]
pub fn smin_histogram(spec: &str, rows: usize, cols: usize, trials: usize, seed: u32, bins: usize) -> Result<String, JsValue> {
    smin_histogram_json(spec, rows, cols, trials, seed as u64, bins).map_err(|e| JsValue::from_str(&e))
}
