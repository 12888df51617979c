//! Regenerates the committed Cauchy pilot (`tests/data/cauchy_pilot.json`).
//! Ignored by default: 4·10⁴ decompositions. Run with `--ignored`.

use serde_json::{json, Value};
use ssv_core::dist::EntryDistribution;
use ssv_core::harness::{run_trials, ExperimentConfig, ShiftSource};

const PILOT: &str = include_str!("data/cauchy_pilot.json");

/// The committed floor is this fraction of the smallest pilot 1st percentile.
const FLOOR_FACTOR: f64 = 0.8;

fn pilot() -> Value {
    let cfg = ExperimentConfig {
        dist: EntryDistribution::cauchy(),
        delta: 2.0,
        sizes: vec![(40, 20), (80, 40), (160, 80), (100, 50)],
        trials: 10_000,
        master_seed: 20_260_101,
        shift_source: ShiftSource::Zero,
        u_grid: vec![0.1],
        beta: 0.5,
    };
    let (_, summary) = run_trials(&cfg).unwrap();
    let p01 = |rows: usize| summary.sizes.iter().find(|s| s.n_rows == rows).unwrap().percentiles.p01;
    let floor = FLOOR_FACTOR * [40, 80, 160].map(p01).into_iter().fold(f64::INFINITY, f64::min);
    json!({
        "dist": "cauchy",
        "trials": cfg.trials,
        "master_seed": cfg.master_seed,
        "floor_factor": FLOOR_FACTOR,
        "sizes": summary.sizes.iter().map(|s| json!({"N": s.n_rows, "n": s.n_cols, "percentiles": s.percentiles})).collect::<Vec<_>>(),
        "floor": floor,
        "floor_100x50": FLOOR_FACTOR * p01(100),
    })
}

#[test]
#[ignore]
fn regenerate_cauchy_pilot() {
    let fresh = pilot();
    println!("{}", serde_json::to_string_pretty(&fresh).unwrap());
    if std::env::var_os("PILOT_WRITE").is_some() {
        std::fs::write(concat!(env!("CARGO_MANIFEST_DIR"), "/tests/data/cauchy_pilot.json"), serde_json::to_string_pretty(&fresh).unwrap() + "\n").unwrap();
        return;
    }
    let committed: Value = serde_json::from_str(PILOT).unwrap();
    assert_eq!(fresh, committed, "pilot drifted from the committed file");
}
