use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn ssv(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_ssv")).args(args).output().expect("binary runs")
}

fn scratch(name: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("ssv-cli-{}-{name}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    dir
}

fn json(path: &Path) -> serde_json::Value {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

fn ok(out: &Output) {
    assert!(out.status.success(), "stderr: {}", String::from_utf8_lossy(&out.stderr));
}

/// 12x3 matrix with distinct, sign-varying entries.
fn write_matrix(dir: &Path) -> PathBuf {
    let path = dir.join("a.csv");
    let rows: Vec<String> = (0..12)
        .map(|i| (0..3).map(|j| format!("{}", ((i * 7 + j * 5) % 11) as f64 - 5.0 + 0.1 * j as f64)).collect::<Vec<_>>().join(","))
        .collect();
    std::fs::write(&path, rows.join("\n") + "\n").unwrap();
    path
}

#[test]
fn simulate_is_reproducible() {
    let dir = scratch("sim");
    let run = |tag: &str| {
        let (csv, sum) = (dir.join(format!("{tag}.csv")), dir.join(format!("{tag}.json")));
        let out = ssv(&[
            "simulate", "--dist", "gaussian", "--sizes", "20x10,30x15", "--trials", "25", "--seed", "7",
            "--out", csv.to_str().unwrap(), "--json", sum.to_str().unwrap(),
        ]);
        ok(&out);
        (std::fs::read_to_string(csv).unwrap(), json(&sum))
    };
    let (a, sa) = run("a");
    let (b, sb) = run("b");
    assert_eq!(a, b);
    assert_eq!(sa, sb);
    let mut lines = a.lines();
    assert_eq!(lines.next(), Some("trial_index,seed,N,n,s_min,normalized"));
    assert_eq!(lines.count(), 50);
    assert_eq!(sa["sizes"].as_array().unwrap().len(), 2);
}

#[test]
fn detect_rademacher_intervals() {
    let dir = scratch("detect");
    let path = dir.join("d.json");
    ok(&ssv(&["detect", "--dist", "rademacher", "--rows", "64", "--json", path.to_str().unwrap()]));
    let d = json(&path);
    assert_eq!(d["case_selection"]["case_id"], "two_sided");
    assert_eq!(d["detection"]["lambda"].as_f64(), Some(0.0));
    assert_eq!(d["gap"].as_f64(), Some(2.0));
}

#[test]
fn pipeline_bound_below_smallest_singular_value() {
    let dir = scratch("pipe");
    let a = write_matrix(&dir);
    let path = dir.join("p.json");
    ok(&ssv(&["pipeline", "--matrix", a.to_str().unwrap(), "--delta", "4", "--probes", "50", "--json", path.to_str().unwrap()]));
    let r = json(&path);
    let s_min = r["s_min"].as_f64().unwrap();
    assert!(s_min > 0.0);
    for regime in ["peaky", "compressible", "incompressible"] {
        if let Some(lb) = r[regime]["lower_bound"].as_f64() {
            assert!(lb <= s_min + 1e-9, "{regime}: {lb} > {s_min}");
        }
    }
}

#[test]
fn full_space_certificate_is_sound() {
    let dir = scratch("cert");
    let a = write_matrix(&dir);
    let (p, c) = (dir.join("p.json"), dir.join("c.json"));
    ok(&ssv(&["pipeline", "--matrix", a.to_str().unwrap(), "--delta", "4", "--probes", "0", "--json", p.to_str().unwrap()]));
    // H covers every entry, so Γ = A and the certificate is min ‖Ay'‖ − ε‖A‖
    ok(&ssv(&[
        "certify", "--matrix", a.to_str().unwrap(), "--lambda", "0", "--h=-100:100", "--net", "sphere",
        "--epsilon", "0.2", "--subspace", "full", "--json", c.to_str().unwrap(),
    ]));
    let (s_min, cert) = (json(&p)["s_min"].as_f64().unwrap(), json(&c));
    let lb = cert["lower_bound"].as_f64().unwrap();
    assert!(cert["net_size"].as_u64().unwrap() > 10);
    assert!(lb <= s_min + 1e-9, "{lb} > {s_min}");
    assert!(cert["h"].as_f64().unwrap() >= s_min - 1e-9);
}

#[test]
fn component_peaky_json() {
    let dir = scratch("comp");
    let path = dir.join("c.json");
    ok(&ssv(&["component", "--mode", "peaky", "--dist", "rademacher", "--size", "40x10", "--trials", "20", "--json", path.to_str().unwrap()]));
    let s = json(&path);
    assert_eq!(s["mode"], "peaky");
    assert_eq!(s["trials"].as_u64(), Some(20));
}

#[test]
fn errors_exit_nonzero() {
    let out = ssv(&["simulate", "--dist", "nope"]);
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).starts_with("error:"));
    let out = ssv(&["pipeline", "--matrix", "/nonexistent/a.csv"]);
    assert!(!out.status.success());
    let dir = scratch("bad");
    let a = write_matrix(&dir);
    let out = ssv(&["certify", "--matrix", a.to_str().unwrap(), "--lambda", "0", "--h", "2:1", "--epsilon", "0.5"]);
    assert!(!out.status.success());
}
