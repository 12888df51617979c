//! The end-to-end construction on one realization: case selection, the
//! peaky / almost-sparse / spread regimes and their net certificates.

use std::collections::BTreeMap;

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use crate::bounds::{distance_threshold, peaky_threshold, ConstantsConfig};
use crate::certify::{certify_general, leave_one_out_distances, operator_norm, singular_extremes, SubspaceChoice};
use crate::detect::{detect_on_law, DetectionResult};
use crate::dist::{select_shift_and_case, CaseId, CaseSelection, EntryDistribution};
use crate::error::{Error, Result};
use crate::hpart::{split_matrix, IntervalUnion};
use crate::rng::{derive_seed, CounterRng};
use crate::sphere::{iquartic_root, isqrt, is_almost_sparse, norm_inf, sparsified_net, ShellRegion, SupportPolicy};

use super::trials::MAX_ROWS;

#[derive(Debug, Clone)]
pub struct PipelineOptions {
    /// Law of the entries of `A`; the empirical law of `A`'s entries when absent.
    pub dist: Option<EntryDistribution>,
    pub tau0_override: Option<f64>,
    /// Net accuracy for the almost-sparse regime (default `N^{-2}`).
    pub compressible_epsilon: Option<f64>,
    /// Net accuracy for the spread regime (default `h_wrap·h/(2·C·R)`).
    pub incompressible_epsilon: Option<f64>,
    /// Random unit vectors used to probe each regime.
    pub probe_count: usize,
}

impl Default for PipelineOptions {
    fn default() -> Self {
        Self { dist: None, tau0_override: None, compressible_epsilon: None, incompressible_epsilon: None, probe_count: 2000 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum RegimeStatus {
    Certified,
    /// The regime's vector set is empty for this shape.
    Empty,
    Failed,
    /// Not part of the route for this case.
    Skipped,
}

#[derive(Debug, Clone, Serialize)]
pub struct RegimeReport {
    pub status: RegimeStatus,
    pub target_set: String,
    /// In the units of `A + B`.
    pub lower_bound: Option<f64>,
    pub h: Option<f64>,
    pub epsilon: Option<f64>,
    pub regular_norm: Option<f64>,
    pub net_size: Option<usize>,
    pub vacuous: Option<bool>,
    pub params: BTreeMap<String, f64>,
    pub flags: BTreeMap<String, bool>,
    pub error: Option<String>,
    /// Smallest `‖(A+B)y‖` over probe vectors that fell in this regime's set.
    pub probe_min: Option<f64>,
    pub probe_hits: usize,
}

impl RegimeReport {
    fn new(target_set: &str) -> Self {
        Self {
            status: RegimeStatus::Skipped,
            target_set: target_set.to_string(),
            lower_bound: None,
            h: None,
            epsilon: None,
            regular_norm: None,
            net_size: None,
            vacuous: None,
            params: BTreeMap::new(),
            flags: BTreeMap::new(),
            error: None,
            probe_min: None,
            probe_hits: 0,
        }
    }

    fn fail(&mut self, e: Error) {
        self.status = RegimeStatus::Failed;
        self.error = Some(e.to_string());
    }

    fn param(&mut self, k: &str, v: f64) {
        self.params.insert(k.to_string(), v);
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct PipelineReport {
    #[serde(rename = "N")]
    pub n_rows: usize,
    #[serde(rename = "n")]
    pub n_cols: usize,
    pub delta: f64,
    pub beta: f64,
    pub seed: u64,
    /// Anti-concentration window; the construction runs on `(A, B)/α`.
    pub alpha: Option<f64>,
    pub case_selection: Option<CaseSelection>,
    pub case_error: Option<String>,
    /// Peakiness level separating the peaky regime.
    pub theta: f64,
    /// `⌊√N⌋`, the sparsity level of the almost-sparse regime.
    pub sparsity: usize,
    pub detection: Option<DetectionResult>,
    pub tau0: Option<f64>,
    pub peaky: RegimeReport,
    pub compressible: RegimeReport,
    pub incompressible: RegimeReport,
    /// `‖⟨A/α − λ𝟙⟩_H‖` for the detected `H`.
    pub regular_norm: Option<f64>,
    /// `C·R·√N` with `R = 2^{ℓ+2}`.
    pub norm_budget: Option<f64>,
    pub norm_within_budget: Option<bool>,
    pub s_min: f64,
    /// Minimum over the regimes covering the sphere, when all are certified or empty.
    pub combined_lower_bound: Option<f64>,
}

/// Largest `τ ∈ (0,1]` with `sup_{s≥0} (K·2^{s/2}/τ^{3/2})^{2^{-s/4}τ} ≤ exp(w/4)`,
/// `K = 16√8·C_net·C_norm/(h·f₀)`, `f₀ = (1−δ^{-1/4})√(c·γ)/C_Rog`.
pub fn solve_tau0(gamma: f64, delta: f64, cfg: &ConstantsConfig) -> Result<f64> {
    if !(delta > 1.0) || !(gamma > 0.0) {
        return Err(Error::Argument(format!("need delta > 1 and gamma > 0, got {delta}, {gamma}")));
    }
    let f0 = (1.0 - delta.powf(-0.25)) * (cfg.c_detect * gamma).sqrt() / cfg.c_rogozin;
    let k = 16.0 * 8f64.sqrt() * cfg.c_net * cfg.c_normbound / (cfg.h_wrap * f0);
    let budget = cfg.w_wrap / 4.0;
    // with u = 2^{-s/4} ∈ (0,1] the log of the left side is τ·u·(L − 2 ln u), L = ln K − 1.5 ln τ
    let sup = |tau: f64| {
        let l = k.ln() - 1.5 * tau.ln();
        if l <= 2.0 {
            2.0 * tau * ((l - 2.0) / 2.0).exp()
        } else {
            tau * l
        }
    };
    if sup(1.0) <= budget {
        return Ok(1.0);
    }
    let mut lo = 0.5;
    while sup(lo) > budget {
        lo *= 0.5;
        if lo < 1e-300 {
            return Err(Error::Degenerate("no feasible tau0".into()));
        }
    }
    let mut hi = (2.0 * lo).min(1.0);
    while hi - lo > 1e-6 * hi {
        let mid = 0.5 * (lo + hi);
        if sup(mid) <= budget {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(lo)
}

fn compressible_interval(n_rows: usize) -> IntervalUnion {
    let r = (n_rows as f64).sqrt();
    IntervalUnion::new(vec![(-r, -1.0), (1.0, r)]).expect("valid for N >= 2")
}

/// Random unit vectors, half dense Gaussian and half sparse.
fn probe_vectors(n: usize, max_sparse: usize, count: usize, seed: u64) -> Vec<Vec<f64>> {
    use rand_distr::{Distribution, StandardNormal};
    let mut rng = CounterRng::new(seed);
    let mut out = Vec::with_capacity(count);
    while out.len() < count {
        let mut y = vec![0.0; n];
        if out.len() % 2 == 0 {
            for v in y.iter_mut() {
                *v = StandardNormal.sample(&mut rng);
            }
        } else {
            let s = 1 + rng.next_index(max_sparse.clamp(1, n));
            for _ in 0..s {
                let j = rng.next_index(n);
                y[j] = StandardNormal.sample(&mut rng);
            }
        }
        let norm = y.iter().map(|v| v * v).sum::<f64>().sqrt();
        if norm > 0.0 {
            out.push(y.iter().map(|v| v / norm).collect());
        }
    }
    out
}

pub fn pipeline_certify(a: &DMatrix<f64>, b: &DMatrix<f64>, delta: f64, beta: f64, cfg: &ConstantsConfig, seed: u64, options: &PipelineOptions) -> Result<PipelineReport> {
    let (rows, cols) = a.shape();
    if b.shape() != (rows, cols) {
        return Err(Error::Argument(format!("A is {rows}x{cols}, B is {}x{}", b.nrows(), b.ncols())));
    }
    if !(delta > 1.0) || (rows as f64) < delta * cols as f64 || cols == 0 {
        return Err(Error::Argument(format!("need N >= delta*n with delta > 1, got {rows}x{cols}, delta={delta}")));
    }
    if rows > MAX_ROWS {
        return Err(Error::Resource(format!("N = {rows} exceeds the desk-scale limit {MAX_ROWS}")));
    }
    if !(beta > 0.0 && beta < 1.0) {
        return Err(Error::Argument(format!("beta must lie in (0,1), got {beta}")));
    }
    cfg.validate()?;
    let d = a + b;
    let (_, s_min) = singular_extremes(&d)?;
    let sparsity = isqrt(rows).min(cols);

    // case selection on the calibrated law
    let dist = match &options.dist {
        Some(dd) => dd.clone(),
        None => EntryDistribution::empirical(a.iter().copied().collect())?,
    };
    let (scaled, case) = match dist.calibrate_scale(beta) {
        Some(s) => {
            let c = select_shift_and_case(&s, beta, rows);
            (Some(s), c)
        }
        None => (None, select_shift_and_case(&dist, beta, rows)),
    };
    let (case_selection, case_error) = match case {
        Ok(c) => (Some(c), None),
        Err(e) => (None, Some(e.to_string())),
    };
    let alpha = scaled.as_ref().map(|s| s.scale);
    let two_sided = matches!(case_selection, Some(CaseSelection { case_id: CaseId::TwoSided, .. }));
    let theta = match (&case_selection, two_sided) {
        (Some(c), true) => peaky_threshold(c.gamma, delta, cfg)?,
        _ => 1.0 / (cols as f64).sqrt(),
    };

    let mut report = PipelineReport {
        n_rows: rows,
        n_cols: cols,
        delta,
        beta,
        seed,
        alpha,
        case_selection,
        case_error,
        theta,
        sparsity,
        detection: None,
        tau0: None,
        peaky: RegimeReport::new("peaky"),
        compressible: RegimeReport::new("almost_sparse"),
        incompressible: RegimeReport::new("spread"),
        regular_norm: None,
        norm_budget: None,
        norm_within_budget: None,
        s_min,
        combined_lower_bound: None,
    };

    // peaky: ‖Dy‖ ≥ |y_j|·dist(col_j D, span of the others) ≥ θ·min_j dist_j
    report.peaky.param("theta", theta);
    match leave_one_out_distances(&d) {
        Ok(dists) => {
            let h = dists.iter().copied().fold(f64::INFINITY, f64::min);
            report.peaky.status = RegimeStatus::Certified;
            report.peaky.h = Some(h);
            report.peaky.lower_bound = Some(theta * h);
            report.peaky.vacuous = Some(theta * h <= 0.0);
        }
        Err(e) => report.peaky.fail(e),
    }

    if let (true, Some(c), Some(s), Some(alpha)) = (two_sided, report.case_selection, scaled.as_ref(), alpha) {
        let a_s = a.map(|x| x / alpha);
        let b_s = b.map(|x| x / alpha);
        run_compressible(&mut report.compressible, &a_s, &b_s, c.z, theta, sparsity, alpha, options);
        run_incompressible(&mut report, &a_s, &b_s, s, c, cfg, options);
    }

    // probes
    let probes = probe_vectors(cols, sparsity, options.probe_count, derive_seed(seed, 0x9E37));
    for y in &probes {
        let dy = (&d * DVector::from_column_slice(y)).norm();
        let target = if norm_inf(y) >= theta {
            &mut report.peaky
        } else if is_almost_sparse(y, isqrt(rows)) {
            &mut report.compressible
        } else {
            &mut report.incompressible
        };
        target.probe_hits += 1;
        target.probe_min = Some(target.probe_min.map_or(dy, |m: f64| m.min(dy)));
    }

    let regimes: Vec<&RegimeReport> = if two_sided {
        vec![&report.peaky, &report.compressible, &report.incompressible]
    } else {
        vec![&report.peaky]
    };
    if regimes.iter().all(|r| matches!(r.status, RegimeStatus::Certified | RegimeStatus::Empty)) {
        report.combined_lower_bound = regimes.iter().filter_map(|r| r.lower_bound).reduce(f64::min);
    }
    Ok(report)
}

#[allow(clippy::too_many_arguments)]
fn run_compressible(r: &mut RegimeReport, a: &DMatrix<f64>, b: &DMatrix<f64>, z: f64, theta: f64, sparsity: usize, alpha: f64, options: &PipelineOptions) {
    let (rows, cols) = a.shape();
    r.param("theta", theta);
    r.param("m", sparsity as f64);
    // every unit vector in ℝ^n with n·θ² ≤ 1 is θ-peaky
    if cols as f64 * theta * theta <= 1.0 {
        r.status = RegimeStatus::Empty;
        return;
    }
    let eps = options.compressible_epsilon.unwrap_or((rows as f64).powi(-2)).min(1.0);
    r.epsilon = Some(eps);
    let result = (|| -> Result<_> {
        let split = split_matrix(a, b, z, &compressible_interval(rows))?;
        let region = ShellRegion::new(0.5, 1.0, theta)?;
        let net = sparsified_net(cols, sparsity, eps, &region, SupportPolicy::Enumerate)?;
        if net.is_empty() {
            return Err(Error::Degenerate("net for the almost-sparse regime is empty".into()));
        }
        let cert = certify_general(&split, &net, SubspaceChoice::Support, eps, "almost_sparse")?;
        Ok((cert, net.len()))
    })();
    match result {
        Ok((cert, size)) => {
            r.status = RegimeStatus::Certified;
            r.h = Some(cert.h * alpha);
            r.regular_norm = Some(cert.regular_norm * alpha);
            r.lower_bound = Some(cert.lower_bound * alpha);
            r.vacuous = Some(cert.vacuous);
            r.net_size = Some(size);
        }
        Err(e) => r.fail(e),
    }
}

fn run_incompressible(report: &mut PipelineReport, a: &DMatrix<f64>, b: &DMatrix<f64>, scaled: &EntryDistribution, c: CaseSelection, cfg: &ConstantsConfig, options: &PipelineOptions) {
    let (rows, cols) = a.shape();
    let alpha = scaled.scale;
    let r = &mut report.incompressible;
    let det = match detect_on_law(&scaled.normalized_law(), c.z, c.gamma, rows, cfg) {
        Ok(det) => det,
        Err(e) => {
            r.fail(e);
            return;
        }
    };
    let ell = det.ell;
    let (big_r, gap) = (det.box_radius(), det.gap());
    let mass = det.mass_floor(c.gamma);
    let h_set = det.h();
    let lambda = det.lambda;
    report.detection = Some(det);

    let split = match split_matrix(a, b, lambda, &h_set) {
        Ok(s) => s,
        Err(e) => {
            r.fail(e);
            return;
        }
    };
    if let Ok(norm) = operator_norm(&split.regular) {
        let budget = cfg.c_normbound * big_r * (rows as f64).sqrt();
        report.regular_norm = Some(norm);
        report.norm_budget = Some(budget);
        report.norm_within_budget = Some(norm <= budget);
    }

    let tau0 = match options.tau0_override {
        Some(t) => t,
        None => match solve_tau0(c.gamma, report.delta, cfg) {
            Ok(t) => t,
            Err(e) => {
                r.fail(e);
                return;
            }
        },
    };
    report.tau0 = Some(tau0);
    let m = ((tau0 * cols as f64 / 2f64.powf(ell as f64 / 4.0)).ceil() as usize).clamp(1, cols);
    let t = 0.5 * (m as f64 / cols as f64).sqrt();
    let h_dist = match distance_threshold(report.delta, mass, t, gap, cfg) {
        Ok(h) => h,
        Err(e) => {
            r.fail(e);
            return;
        }
    };
    let cap = 1.0 / iquartic_root(rows).max(1) as f64;
    r.param("ell", ell as f64);
    r.param("R", big_r);
    r.param("d", gap);
    r.param("r", mass);
    r.param("m", m as f64);
    r.param("t", t);
    r.param("h_distance", h_dist);
    r.param("linf_cap", cap);
    // the distance estimate wants ‖y‖_∞ ≤ 2h/d; the certificate itself only needs the witness bound
    r.flags.insert("distance_hypothesis".into(), cap <= 2.0 * h_dist / gap);

    // every unit vector is almost ⌊√N⌋-sparse when 4⌊√N⌋ ≥ n
    if 4 * isqrt(rows) >= cols {
        r.status = RegimeStatus::Empty;
        return;
    }
    let eps = options
        .incompressible_epsilon
        .unwrap_or(cfg.h_wrap * h_dist / (2.0 * cfg.c_normbound * big_r))
        .min(1.0);
    r.epsilon = Some(eps);
    let result = (|| -> Result<_> {
        let region = ShellRegion::new(t.min(1.0), 1.0, cap)?;
        let net = sparsified_net(cols, m, eps, &region, SupportPolicy::Enumerate)?;
        if net.is_empty() {
            return Err(Error::Degenerate("net for the spread regime is empty".into()));
        }
        let cert = certify_general(&split, &net, SubspaceChoice::Support, eps, "spread")?;
        Ok((cert, net.len()))
    })();
    match result {
        Ok((cert, size)) => {
            r.status = RegimeStatus::Certified;
            r.h = Some(cert.h * alpha);
            r.regular_norm = Some(cert.regular_norm * alpha);
            r.lower_bound = Some(cert.lower_bound * alpha);
            r.vacuous = Some(cert.vacuous);
            r.net_size = Some(size);
        }
        Err(e) => r.fail(e),
    }
}
