//! Independent oracles shared by the integration tests. Nothing here calls the
//! library routine it checks.

#![allow(dead_code)]

use nalgebra::{DMatrix, DVector};
use ssv_core::detect::DetectionResult;
use ssv_core::dist::{EntryDistribution, Family};
use ssv_core::hpart::IntervalUnion;
use ssv_core::rng::CounterRng;

// ---------- integration ----------

fn simpson(f: &dyn Fn(f64) -> f64, a: f64, b: f64, fa: f64, fm: f64, fb: f64, whole: f64, tol: f64, depth: u32) -> f64 {
    let m = 0.5 * (a + b);
    let (lm, rm) = (0.5 * (a + m), 0.5 * (m + b));
    let (flm, frm) = (f(lm), f(rm));
    let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    let delta = left + right - whole;
    if depth == 0 || delta.abs() <= 15.0 * tol {
        return left + right + delta / 15.0;
    }
    simpson(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1) + simpson(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1)
}

/// Adaptive Simpson quadrature of `f` over `[a, b]` to absolute tolerance `tol`.
pub fn integrate(f: &dyn Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> f64 {
    if !(b > a) {
        return 0.0;
    }
    let (fa, fb, fm) = (f(a), f(b), f(0.5 * (a + b)));
    let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    simpson(f, a, b, fa, fm, fb, whole, tol, 50)
}

/// Density of the normalized entry `ξ = a/α` for continuous families, written
/// from the textbook formulas.
pub fn xi_pdf(d: &EntryDistribution) -> Option<Box<dyn Fn(f64) -> f64>> {
    let (alpha, loc) = (d.scale, d.location);
    let base: Box<dyn Fn(f64) -> f64> = match d.family {
        Family::Gaussian => Box::new(|y: f64| (-y * y / 2.0).exp() / (2.0 * std::f64::consts::PI).sqrt()),
        Family::Cauchy => Box::new(|y: f64| 1.0 / (std::f64::consts::PI * (1.0 + y * y))),
        Family::Pareto { shape } => Box::new(move |y: f64| if y >= 1.0 { shape / y.powf(shape + 1.0) } else { 0.0 }),
        Family::Uniform { lo, hi } => Box::new(move |y: f64| if (lo..=hi).contains(&y) { 1.0 / (hi - lo) } else { 0.0 }),
        _ => return None,
    };
    Some(Box::new(move |x: f64| alpha * base(alpha * x - loc)))
}

/// Points where the density of `ξ` is not smooth.
fn xi_breaks(d: &EntryDistribution) -> Vec<f64> {
    let to_xi = |y: f64| (y + d.location) / d.scale;
    match d.family {
        Family::Pareto { .. } => vec![to_xi(1.0)],
        Family::Uniform { lo, hi } => vec![to_xi(lo), to_xi(hi)],
        _ => vec![],
    }
}

/// Atoms of `ξ` for atomic families.
pub fn xi_atoms(d: &EntryDistribution) -> Option<Vec<(f64, f64)>> {
    let to_xi = |y: f64| (y + d.location) / d.scale;
    match &d.family {
        Family::Rademacher => Some(vec![(to_xi(-1.0), 0.5), (to_xi(1.0), 0.5)]),
        Family::TwoPoint { p, x1, x2 } => Some(vec![(to_xi(*x1), *p), (to_xi(*x2), 1.0 - p)]),
        Family::Constant(c) => Some(vec![(to_xi(*c), 1.0)]),
        Family::Empirical(s) => Some(s.iter().map(|&y| (to_xi(y), 1.0 / s.len() as f64)).collect()),
        _ => None,
    }
}

/// `∫_lo^hi g(x) dP_ξ(x)` for a closed interval.
pub fn xi_expect(d: &EntryDistribution, lo: f64, hi: f64, g: &dyn Fn(f64) -> f64) -> f64 {
    if let Some(atoms) = xi_atoms(d) {
        return atoms.iter().filter(|(x, _)| *x >= lo && *x <= hi).map(|(x, m)| m * g(*x)).sum();
    }
    let pdf = xi_pdf(d).expect("continuous family");
    let mut cuts = vec![lo];
    cuts.extend(xi_breaks(d).into_iter().filter(|&b| b > lo && b < hi));
    cuts.push(hi);
    cuts.windows(2).map(|w| integrate(&|x| g(x) * pdf(x), w[0], w[1], 1e-13)).sum()
}

// ---------- detection ----------

#[derive(Debug)]
pub struct DetectionCheck {
    pub gap_ok: bool,
    pub containment_ok: bool,
    pub mass_ok: bool,
    pub mean: f64,
    pub mean_tolerance: f64,
    pub shift_ok: bool,
}

impl DetectionCheck {
    pub fn passes(&self) -> bool {
        self.gap_ok && self.containment_ok && self.mass_ok && self.shift_ok && self.mean.abs() <= self.mean_tolerance
    }
}

/// Recomputes every postcondition of a detection from scratch. Analytic laws
/// get tolerance 1e−8 on the mean; empirical laws 3 standard errors.
pub fn check_detection(d: &EntryDistribution, z: f64, gamma: f64, r: &DetectionResult) -> DetectionCheck {
    let ell = r.ell.max(r.ell1).max(r.ell2);
    let h1 = r.h1.intervals()[0];
    let h2 = r.h2.intervals()[0];
    let gap = h2.0 - h1.1;
    let bound = 2f64.powi(ell as i32 + 2);
    let containment_ok = [h1, h2].iter().all(|&(lo, hi)| lo >= -bound && hi <= bound);
    // the intervals around z, before the shift by −λ
    let (a1, b1) = (z - 2f64.powi(r.ell1 as i32 + 1), z - 2f64.powi(r.ell1 as i32));
    let (a2, b2) = (z + 2f64.powi(r.ell2 as i32), z + 2f64.powi(r.ell2 as i32 + 1));
    let p1 = xi_expect(d, a1, b1, &|_| 1.0);
    let p2 = xi_expect(d, a2, b2, &|_| 1.0);
    let floor = |l: u32| r.c_detect * gamma * 2f64.powf(-(l as f64) / 8.0);
    let mass_ok = p1 >= floor(r.ell1) - 1e-12 && p2 >= floor(r.ell2) - 1e-12;
    let lam = r.lambda;
    let mean = xi_expect(d, a1, b1, &|x| x - lam) + xi_expect(d, a2, b2, &|x| x - lam);
    let mean_tolerance = match &d.family {
        Family::Empirical(s) => {
            let second = xi_expect(d, a1, b1, &|x| (x - lam).powi(2)) + xi_expect(d, a2, b2, &|x| (x - lam).powi(2));
            (3.0 * ((second - mean * mean).max(0.0) / s.len() as f64).sqrt()).max(1e-12)
        }
        _ => 1e-8,
    };
    let shift_ok = lam >= z - 2f64.powi(r.ell1 as i32 + 1) - 1e-12 && lam <= z + 2f64.powi(r.ell2 as i32 + 1) + 1e-12;
    DetectionCheck {
        gap_ok: gap >= 2f64.powi(ell as i32) * (1.0 - 1e-12),
        containment_ok,
        mass_ok,
        mean,
        mean_tolerance,
        shift_ok,
    }
}

// ---------- concentration ----------

/// `max_λ #{i : |x_i − λ| ≤ α} / M` over λ at every sample point and every
/// midpoint of a sample pair, plus the window edges `x_i ± α`.
pub fn brute_force_q(samples: &[f64], alpha: f64) -> f64 {
    let mut centres: Vec<f64> = Vec::new();
    for (i, &x) in samples.iter().enumerate() {
        centres.extend([x, x + alpha, x - alpha]);
        for &y in &samples[i + 1..] {
            centres.push(0.5 * (x + y));
        }
    }
    let best = centres
        .iter()
        .map(|&c| samples.iter().filter(|&&x| (x - c).abs() <= alpha).count())
        .max()
        .unwrap_or(0);
    best as f64 / samples.len() as f64
}

// ---------- sphere ----------

pub fn norm(y: &[f64]) -> f64 {
    y.iter().map(|v| v * v).sum::<f64>().sqrt()
}

pub fn gaussian_vector(n: usize, rng: &mut CounterRng) -> Vec<f64> {
    use rand_distr::{Distribution, StandardNormal};
    (0..n).map(|_| StandardNormal.sample(rng)).collect()
}

pub fn random_unit(n: usize, rng: &mut CounterRng) -> Vec<f64> {
    loop {
        let g = gaussian_vector(n, rng);
        let r = norm(&g);
        if r > 0.0 {
            return g.iter().map(|v| v / r).collect();
        }
    }
}

/// Uniform point of the unit ball.
pub fn random_in_ball(n: usize, rng: &mut CounterRng) -> Vec<f64> {
    let u = random_unit(n, rng);
    let r = rng.next_unit().powf(1.0 / n as f64);
    u.iter().map(|v| v * r).collect()
}

/// Sum of the `m` largest squares by trying every `m`-subset.
pub fn brute_top_m(y: &[f64], m: usize) -> f64 {
    fn rec(y: &[f64], start: usize, left: usize, acc: f64, best: &mut f64) {
        if left == 0 {
            *best = best.max(acc);
            return;
        }
        for j in start..=y.len() - left {
            rec(y, j + 1, left - 1, acc + y[j] * y[j], best);
        }
    }
    let mut best = 0.0;
    rec(y, 0, m.min(y.len()), 0.0, &mut best);
    best
}

/// The three properties a spread witness must have: size at most `m`,
/// restricted norm at least `½√(m/n)`, restricted sup-norm at most `1/⌊N^{1/4}⌋`.
pub fn check_witness(y: &[f64], j: &[usize], m: usize, n_rows: usize) -> Result<(), String> {
    let n = y.len();
    let mut q = 1usize;
    while (q + 1).pow(4) <= n_rows {
        q += 1;
    }
    let mut seen = vec![false; n];
    for &k in j {
        if k >= n || seen[k] {
            return Err(format!("index {k} out of range or repeated"));
        }
        seen[k] = true;
    }
    if j.len() > m {
        return Err(format!("|J| = {} > m = {m}", j.len()));
    }
    let restricted = j.iter().map(|&k| y[k] * y[k]).sum::<f64>().sqrt();
    let need = 0.5 * (m as f64 / n as f64).sqrt();
    if restricted < need * (1.0 - 1e-12) {
        return Err(format!("‖yχ_J‖ = {restricted} < {need}"));
    }
    let cap = 1.0 / q as f64;
    if let Some(&k) = j.iter().find(|&&k| y[k].abs() > cap) {
        return Err(format!("|y_{k}| = {} > {cap}", y[k].abs()));
    }
    Ok(())
}

/// Nearest-point oracle for a dense point set, bucketed on a grid of cell
/// width `cell`. Exact whenever the query's nearest point lies within `cell`.
pub struct BucketGrid {
    cell: f64,
    buckets: std::collections::HashMap<Vec<i64>, Vec<Vec<f64>>>,
}

impl BucketGrid {
    pub fn new(points: &[Vec<f64>], cell: f64) -> Self {
        let mut buckets: std::collections::HashMap<Vec<i64>, Vec<Vec<f64>>> = Default::default();
        for p in points {
            buckets.entry(Self::key(p, cell)).or_default().push(p.clone());
        }
        Self { cell, buckets }
    }

    fn key(p: &[f64], cell: f64) -> Vec<i64> {
        p.iter().map(|v| (v / cell).floor() as i64).collect()
    }

    /// Distance to the nearest point, or `None` when none lies in the 3^d
    /// neighbourhood (then the true distance exceeds `cell`).
    pub fn nearest_within_cell(&self, q: &[f64]) -> Option<f64> {
        let base = Self::key(q, self.cell);
        let d = q.len();
        let mut best: Option<f64> = None;
        for code in 0..3usize.pow(d as u32) {
            let mut key = base.clone();
            let mut c = code;
            for k in key.iter_mut() {
                *k += (c % 3) as i64 - 1;
                c /= 3;
            }
            if let Some(pts) = self.buckets.get(&key) {
                for p in pts {
                    let dist = p.iter().zip(q).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt();
                    best = Some(best.map_or(dist, |b| b.min(dist)));
                }
            }
        }
        best
    }
}

/// `min_{y'} ‖yχ_{supp y'} − y'‖` by scanning every point.
pub fn brute_projected_distance(points: &[(Vec<usize>, Vec<f64>)], y: &[f64]) -> f64 {
    points
        .iter()
        .map(|(s, v)| s.iter().zip(v).map(|(&j, &x)| (y[j] - x) * (y[j] - x)).sum::<f64>().sqrt())
        .fold(f64::INFINITY, f64::min)
}

// ---------- linear algebra ----------

/// Distance from `v` to the column span of `g` via least squares on the
/// normal equations' pseudo-inverse (SVD), independent of the Gram–Schmidt route.
pub fn lstsq_distance(v: &DVector<f64>, g: &DMatrix<f64>) -> f64 {
    if g.ncols() == 0 {
        return v.norm();
    }
    let svd = g.clone().svd(true, true);
    let smax = svd.singular_values.max();
    let coef = svd.solve(v, 1e-10 * smax.max(1.0)).expect("svd solve");
    (v - g * coef).norm()
}

pub fn matrix_from(rows: usize, cols: usize, f: impl FnMut(usize, usize) -> f64) -> DMatrix<f64> {
    DMatrix::from_fn(rows, cols, f)
}

/// A random union of up to three disjoint closed intervals inside `[-8, 8]`.
pub fn random_intervals(rng: &mut CounterRng) -> IntervalUnion {
    let k = 1 + rng.next_index(3);
    let mut ends: Vec<f64> = (0..2 * k).map(|_| -8.0 + 16.0 * rng.next_unit()).collect();
    ends.sort_by(f64::total_cmp);
    ends.dedup();
    let mut out = Vec::new();
    let mut i = 0;
    while i + 1 < ends.len() {
        if out.last().is_none_or(|&(_, hi): &(f64, f64)| ends[i] > hi) && ends[i] <= ends[i + 1] {
            out.push((ends[i], ends[i + 1]));
        }
        i += 2;
    }
    IntervalUnion::new(out).expect("sorted disjoint")
}
