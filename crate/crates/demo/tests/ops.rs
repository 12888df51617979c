use serde_json::Value;
use ssv_demo::{concentration_curve_json, detect_json, smin_histogram_json};

fn parse(s: String) -> Value {
    serde_json::from_str(&s).unwrap()
}

#[test]
fn gaussian_curve_matches_erf_points() {
    let v = parse(concentration_curve_json("gaussian", 0.1, 10.0, 3).unwrap());
    let curve = v["curve"].as_array().unwrap();
    assert_eq!(curve.len(), 3);
    // Q(N(0,1), 1) = erf(1/√2)
    assert!((curve[1]["alpha"].as_f64().unwrap() - 1.0).abs() < 1e-12);
    assert!((curve[1]["q"].as_f64().unwrap() - 0.682_689_492_137_086).abs() < 1e-9);
    let qs: Vec<f64> = curve.iter().map(|p| p["q"].as_f64().unwrap()).collect();
    assert!(qs.windows(2).all(|w| w[0] <= w[1]));
    assert!(concentration_curve_json("gaussian", 1.0, 0.5, 3).is_err());
}

#[test]
fn rademacher_detection() {
    let v = parse(detect_json("rademacher", 0.5, 64).unwrap());
    assert_eq!(v["case"]["case_id"], "two_sided");
    assert_eq!(v["gap"].as_f64(), Some(2.0));
    assert!(detect_json("constant:1", 0.5, 64).is_err());
}

#[test]
fn histogram_counts_every_trial() {
    let a = smin_histogram_json("cauchy", 30, 15, 40, 9, 8).unwrap();
    let v = parse(a.clone());
    let total: u64 = v["counts"].as_array().unwrap().iter().map(|c| c.as_u64().unwrap()).sum();
    assert_eq!(total, 40);
    assert_eq!(a, smin_histogram_json("cauchy", 30, 15, 40, 9, 8).unwrap());
    assert!(smin_histogram_json("gaussian", 400, 400, 400, 0, 8).is_err());
}
