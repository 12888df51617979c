use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use ssv_core::bounds::ConstantsConfig;
use ssv_core::certify::{certify_general, SubspaceChoice};
use ssv_core::detect::detect_on_law;
use ssv_core::dist::{select_shift_and_case, EntryDistribution};
use ssv_core::harness::{
    component_experiment, fit_decay, pipeline_certify, run_trials, ComponentMode, ComponentParams, ExperimentConfig, PipelineOptions,
    RegimeReport, ShiftSource,
};
use ssv_core::hpart::{split_matrix, IntervalUnion};
use ssv_core::io::read_matrix;
use ssv_core::sphere::{ball_net, sparsified_net, Net, ShellRegion, SupportPolicy};
use ssv_core::{Error, Result};

#[derive(Parser)]
#[command(name = "ssv", version, about = "Smallest singular values of rectangular random matrices")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Monte Carlo estimate of the law of s_min(A+B)/√N.
    Simulate(SimulateArgs),
    /// End-to-end lower bound for a given matrix.
    Pipeline(PipelineArgs),
    /// Calibrate, select the case, and detect the dyadic intervals of a law.
    Detect(DetectArgs),
    /// Net certificate for a given split and net.
    Certify(CertifyArgs),
    /// Trials on one ingredient (peaky columns, subspace distances, norms).
    Component(ComponentArgs),
}

#[derive(Args)]
struct Common {
    /// Constants file, one `key = value` per line.
    #[arg(long)]
    constants: Option<PathBuf>,
    /// Write the result as JSON.
    #[arg(long)]
    json: Option<PathBuf>,
}

#[derive(Args)]
struct SimulateArgs {
    /// Entry law, e.g. gaussian, cauchy, pareto:1.5, twopoint:0.5,-1,3, empirical:samples.txt.
    #[arg(long)]
    dist: String,
    #[arg(long, default_value_t = 2.0)]
    delta: f64,
    #[arg(long, default_value_t = 0.5)]
    beta: f64,
    /// Comma-separated NxN sizes, e.g. 100x50,200x100.
    #[arg(long, default_value = "100x50")]
    sizes: String,
    #[arg(long, default_value_t = 1000)]
    trials: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// zero, identity:L or file:PATH.
    #[arg(long, default_value = "zero")]
    shift: String,
    /// Comma-separated thresholds for the tail estimates.
    #[arg(long, default_value = "0.05,0.1,0.2")]
    u_grid: String,
    /// Per-trial CSV.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    json: Option<PathBuf>,
}

#[derive(Args)]
struct PipelineArgs {
    #[arg(long)]
    matrix: PathBuf,
    /// Deterministic shift B; zero when absent.
    #[arg(long)]
    shift: Option<PathBuf>,
    #[arg(long, default_value_t = 2.0)]
    delta: f64,
    #[arg(long, default_value_t = 0.5)]
    beta: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Law of the entries of A; the empirical law of its entries when absent.
    #[arg(long)]
    dist: Option<String>,
    #[arg(long)]
    tau0: Option<f64>,
    /// Net accuracy for the almost-sparse regime.
    #[arg(long)]
    eps_compressible: Option<f64>,
    /// Net accuracy for the spread regime.
    #[arg(long)]
    eps_spread: Option<f64>,
    #[arg(long, default_value_t = 2000)]
    probes: usize,
    #[command(flatten)]
    common: Common,
}

#[derive(Args)]
struct DetectArgs {
    #[arg(long)]
    dist: String,
    #[arg(long, default_value_t = 0.5)]
    beta: f64,
    /// Number of rows N.
    #[arg(long)]
    rows: usize,
    /// Skip calibration and case selection; detect around this centre.
    #[arg(long, requires = "gamma")]
    z: Option<f64>,
    #[arg(long, requires = "z")]
    gamma: Option<f64>,
    #[command(flatten)]
    common: Common,
}

#[derive(Args)]
struct CertifyArgs {
    #[arg(long)]
    matrix: PathBuf,
    #[arg(long)]
    shift: Option<PathBuf>,
    #[arg(long)]
    lambda: f64,
    /// Truncation set as comma-separated lo:hi intervals, e.g. -2:-1,1:2.
    #[arg(long)]
    h: String,
    /// ball, sphere, sparse:M or file:PATH.
    #[arg(long, default_value = "sphere")]
    net: String,
    #[arg(long)]
    epsilon: f64,
    /// support (E = span of the net point's support) or full.
    #[arg(long, default_value = "support")]
    subspace: String,
    /// Shell region for generated nets: radii and sup-norm cap.
    #[arg(long)]
    r_min: Option<f64>,
    #[arg(long)]
    r_max: Option<f64>,
    #[arg(long)]
    linf: Option<f64>,
    #[command(flatten)]
    common: Common,
}

#[derive(Args)]
struct ComponentArgs {
    /// peaky, distance or norm.
    #[arg(long)]
    mode: String,
    #[arg(long)]
    dist: String,
    #[arg(long, default_value = "40x10")]
    size: String,
    #[arg(long, default_value = "0.1,0.25,0.5")]
    thresholds: String,
    #[arg(long, default_value_t = 200)]
    trials: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 2.0)]
    delta: f64,
    #[arg(long, default_value_t = 0.5)]
    beta: f64,
    /// Fixed vector for the distance mode, comma-separated.
    #[arg(long)]
    y: Option<String>,
    #[arg(long, default_value_t = 1.0)]
    t: f64,
    /// Entry bound for the norm mode.
    #[arg(long, default_value_t = 1.0)]
    radius: f64,
    #[command(flatten)]
    common: Common,
}

fn parse_f64(s: &str) -> Result<f64> {
    s.trim().parse().map_err(|e| Error::Parse(format!("`{s}`: {e}")))
}

fn parse_list(s: &str) -> Result<Vec<f64>> {
    s.split(',').filter(|p| !p.trim().is_empty()).map(parse_f64).collect()
}

fn parse_size(s: &str) -> Result<(usize, usize)> {
    let (r, c) = s.trim().split_once('x').ok_or_else(|| Error::Parse(format!("size `{s}` is not NxN")))?;
    let dim = |v: &str| v.trim().parse::<usize>().map_err(|e| Error::Parse(format!("size `{s}`: {e}")));
    Ok((dim(r)?, dim(c)?))
}

fn parse_sizes(s: &str) -> Result<Vec<(usize, usize)>> {
    s.split(',').filter(|p| !p.trim().is_empty()).map(parse_size).collect()
}

/// `lo:hi[,lo:hi...]`; the colon keeps negative endpoints unambiguous.
fn parse_intervals(s: &str) -> Result<IntervalUnion> {
    let mut out = Vec::new();
    for piece in s.split(',').filter(|p| !p.trim().is_empty()) {
        let (lo, hi) = piece.split_once(':').ok_or_else(|| Error::Parse(format!("interval `{piece}` is not lo:hi")))?;
        out.push((parse_f64(lo)?, parse_f64(hi)?));
    }
    IntervalUnion::new(out)
}

fn constants(path: &Option<PathBuf>) -> Result<ConstantsConfig> {
    let cfg = match path {
        Some(p) => ConstantsConfig::load(p)?,
        None => ConstantsConfig::default(),
    };
    cfg.validate()?;
    Ok(cfg)
}

fn write_json<T: Serialize>(path: &Option<PathBuf>, value: &T) -> Result<()> {
    if let Some(p) = path {
        let text = serde_json::to_string_pretty(value).map_err(|e| Error::Parse(e.to_string()))?;
        std::fs::write(p, text + "\n")?;
    }
    Ok(())
}

fn shift_or_zero(path: &Option<PathBuf>, a: &nalgebra::DMatrix<f64>) -> Result<nalgebra::DMatrix<f64>> {
    match path {
        Some(p) => {
            let b = read_matrix(p)?;
            if b.shape() != a.shape() {
                return Err(Error::Config(format!("shift is {:?}, matrix is {:?}", b.shape(), a.shape())));
            }
            Ok(b)
        }
        None => Ok(nalgebra::DMatrix::zeros(a.nrows(), a.ncols())),
    }
}

fn opt(v: Option<f64>) -> String {
    v.map_or_else(|| "-".into(), |x| format!("{x:.6}"))
}

fn simulate(args: SimulateArgs) -> Result<()> {
    let config = ExperimentConfig {
        dist: EntryDistribution::parse(&args.dist)?,
        delta: args.delta,
        sizes: parse_sizes(&args.sizes)?,
        trials: args.trials,
        master_seed: args.seed,
        shift_source: ShiftSource::parse(&args.shift)?,
        u_grid: parse_list(&args.u_grid)?,
        beta: args.beta,
    };
    let (records, summary) = run_trials(&config)?;
    if let Some(path) = &args.out {
        let mut w = csv::Writer::from_path(path)?;
        for r in &records {
            w.serialize(r)?;
        }
        w.flush()?;
    }
    write_json(&args.json, &summary)?;

    println!("{:>6} {:>6} {:>8} {:>10} {:>10} {:>10}", "N", "n", "trials", "p01", "p05", "p50");
    for s in &summary.sizes {
        let p = s.percentiles;
        println!("{:>6} {:>6} {:>8} {:>10.5} {:>10.5} {:>10.5}", s.n_rows, s.n_cols, s.trials, p.p01, p.p05, p.p50);
        for t in &s.tail_estimates {
            println!("{:>22} P(s/sqrtN <= {}) ~ {:.5} ({} hits)", "", t.u, t.probability, t.count);
        }
    }
    for f in &summary.decay_fit {
        println!("decay u={}: v_hat={:.4} r2={:.4}", f.u, f.v_hat, f.r_squared);
    }
    // a single u with fewer than three sizes has no fit; say so rather than stay silent
    if summary.decay_fit.is_empty() && summary.sizes.len() >= 2 {
        if let Some(&u) = config.u_grid.first() {
            if let Err(e) = fit_decay(&summary.sizes, u) {
                println!("decay fit unavailable: {e}");
            }
        }
    }
    Ok(())
}

fn print_regime(name: &str, r: &RegimeReport) {
    println!(
        "{name:<14} {:<10} bound={} net={} vacuous={}{}",
        format!("{:?}", r.status).to_lowercase(),
        opt(r.lower_bound),
        r.net_size.map_or_else(|| "-".into(), |s| s.to_string()),
        r.vacuous.map_or_else(|| "-".into(), |v| v.to_string()),
        r.error.as_ref().map_or_else(String::new, |e| format!(" ({e})")),
    );
}

fn pipeline(args: PipelineArgs) -> Result<()> {
    let cfg = constants(&args.common.constants)?;
    let a = read_matrix(&args.matrix)?;
    let b = shift_or_zero(&args.shift, &a)?;
    let options = PipelineOptions {
        dist: args.dist.as_deref().map(EntryDistribution::parse).transpose()?,
        tau0_override: args.tau0,
        compressible_epsilon: args.eps_compressible,
        incompressible_epsilon: args.eps_spread,
        probe_count: args.probes,
    };
    let rep = pipeline_certify(&a, &b, args.delta, args.beta, &cfg, args.seed, &options)?;
    write_json(&args.common.json, &rep)?;

    println!("N={} n={} s_min={:.6} alpha={} theta={:.6}", rep.n_rows, rep.n_cols, rep.s_min, opt(rep.alpha), rep.theta);
    if let Some(e) = &rep.case_error {
        println!("case selection failed: {e}");
    }
    print_regime("peaky", &rep.peaky);
    print_regime("almost-sparse", &rep.compressible);
    print_regime("spread", &rep.incompressible);
    println!("combined lower bound: {}", opt(rep.combined_lower_bound));
    Ok(())
}

#[derive(Serialize)]
struct DetectReport {
    alpha: Option<f64>,
    case_selection: Option<ssv_core::dist::CaseSelection>,
    z: f64,
    gamma: f64,
    detection: ssv_core::detect::DetectionResult,
    h: IntervalUnion,
    gap: f64,
    mass_floor: f64,
}

fn detect(args: DetectArgs) -> Result<()> {
    let cfg = constants(&args.common.constants)?;
    let dist = EntryDistribution::parse(&args.dist)?;
    let (scaled, case) = match (args.z, args.gamma) {
        (Some(_), Some(_)) => (dist, None),
        _ => {
            let scaled = dist.calibrate_scale(args.beta).ok_or_else(|| {
                Error::Precondition(format!("no scale reaches Q(a/alpha,1) <= 1 - beta = {}", 1.0 - args.beta))
            })?;
            let case = select_shift_and_case(&scaled, args.beta, args.rows)?;
            (scaled, Some(case))
        }
    };
    let (z, gamma) = match case {
        Some(c) => (c.z, c.gamma),
        None => (args.z.unwrap(), args.gamma.unwrap()),
    };
    let detection = detect_on_law(&scaled.normalized_law(), z, gamma, args.rows, &cfg)?;
    let report = DetectReport {
        alpha: case.map(|_| scaled.scale),
        case_selection: case,
        z,
        gamma,
        h: detection.h(),
        gap: detection.gap(),
        mass_floor: detection.mass_floor(gamma),
        detection,
    };
    write_json(&args.common.json, &report)?;

    if let Some(c) = &report.case_selection {
        println!("alpha={} case={:?} z={:.6} gamma={}", opt(report.alpha), c.case_id, c.z, c.gamma);
    }
    let d = &report.detection;
    println!("levels l1={} l2={} l={} lambda={:.6}", d.ell1, d.ell2, d.ell, d.lambda);
    println!("H1={:?} mass={:.6}", d.h1.intervals(), d.mass1);
    println!("H2={:?} mass={:.6}", d.h2.intervals(), d.mass2);
    println!("gap={:.6} mass floor={:.6}", report.gap, report.mass_floor);
    Ok(())
}

fn region(args: &CertifyArgs, default: ShellRegion) -> Result<ShellRegion> {
    if args.r_min.is_none() && args.r_max.is_none() && args.linf.is_none() {
        return Ok(default);
    }
    ShellRegion::new(args.r_min.unwrap_or(0.0), args.r_max.unwrap_or(1.0), args.linf.unwrap_or(f64::INFINITY))
}

fn describe(reg: &ShellRegion) -> String {
    let mut out = format!("{} <= |y| <= {}", reg.r_min, reg.r_max);
    if reg.linf_max.is_finite() {
        out.push_str(&format!(", |y|_inf <= {}", reg.linf_max));
    }
    out
}

fn build_net(args: &CertifyArgs, n: usize) -> Result<(Net, String)> {
    let spec = args.net.trim();
    if let Some(p) = spec.strip_prefix("file:") {
        let net = Net::from_csv(&std::fs::read_to_string(Path::new(p))?, n, args.epsilon)?;
        return Ok((net, format!("net file {p}")));
    }
    if let Some(m) = spec.strip_prefix("sparse:") {
        let m: usize = m.trim().parse().map_err(|e| Error::Parse(format!("net `{spec}`: {e}")))?;
        let reg = region(args, ShellRegion::ball())?;
        let net = sparsified_net(n, m, args.epsilon, &reg, SupportPolicy::Enumerate)?;
        return Ok((net, format!("{m}-sparse y with {}", describe(&reg))));
    }
    let default = match spec {
        "ball" => ShellRegion::ball(),
        "sphere" => ShellRegion::sphere(),
        other => return Err(Error::Parse(format!("unknown net `{other}` (expected ball, sphere, sparse:M or file:PATH)"))),
    };
    let reg = region(args, default)?;
    Ok((ball_net(n, args.epsilon, &reg)?, format!("y with {}", describe(&reg))))
}

#[derive(Serialize)]
struct CertifyReport {
    net_size: usize,
    inexact_entries: usize,
    #[serde(flatten)]
    certificate: ssv_core::certify::Certificate,
}

fn certify(args: CertifyArgs) -> Result<()> {
    let a = read_matrix(&args.matrix)?;
    let b = shift_or_zero(&args.shift, &a)?;
    let h = parse_intervals(&args.h)?;
    let split = split_matrix(&a, &b, args.lambda, &h)?;
    let (net, target) = build_net(&args, a.ncols())?;
    let choice = match args.subspace.trim() {
        "support" => SubspaceChoice::Support,
        "full" => SubspaceChoice::FullSpace,
        other => return Err(Error::Parse(format!("unknown subspace `{other}` (expected support or full)"))),
    };
    let cert = certify_general(&split, &net, choice, args.epsilon, &target)?;
    let report = CertifyReport { net_size: net.len(), inexact_entries: split.inexact_entries, certificate: cert };
    write_json(&args.common.json, &report)?;

    let c = &report.certificate;
    println!("net: {} points covering {}", report.net_size, c.target_set);
    println!("h={:.6} eps={} |Gamma|={:.6}", c.h, c.epsilon, c.regular_norm);
    println!("lower bound={:.6}{}", c.lower_bound, if c.vacuous { " (vacuous)" } else { "" });
    if report.inexact_entries > 0 {
        println!("note: {} entries of the split are off by rounding", report.inexact_entries);
    }
    Ok(())
}

fn component(args: ComponentArgs) -> Result<()> {
    let mode: ComponentMode = args.mode.parse()?;
    let (rows, cols) = parse_size(&args.size)?;
    let mut params = ComponentParams::new(EntryDistribution::parse(&args.dist)?, rows, cols, parse_list(&args.thresholds)?);
    params.delta = args.delta;
    params.beta = args.beta;
    params.t = args.t;
    params.radius = args.radius;
    params.cfg = constants(&args.common.constants)?;
    params.y = args.y.as_deref().map(parse_list).transpose()?;
    let s = component_experiment(mode, &params, args.trials, args.seed)?;
    write_json(&args.common.json, &s)?;

    println!("{:?} {}x{} trials={} min={:.6} max={:.6}", s.mode, rows, cols, s.trials, s.statistic_min, s.statistic_max);
    for t in &s.tail_estimates {
        println!("  P(stat <= {}) ~ {:.5} ({} hits)", t.u, t.probability, t.count);
    }
    if let Some(r) = s.reference_threshold {
        println!("reference threshold {r:.6}");
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match cli.command {
        Command::Simulate(a) => simulate(a),
        Command::Pipeline(a) => pipeline(a),
        Command::Detect(a) => detect(a),
        Command::Certify(a) => certify(a),
        Command::Component(a) => component(a),
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
