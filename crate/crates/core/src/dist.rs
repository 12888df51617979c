//! Entry laws, Lévy concentration estimates and the shift/case selection
//! that opens the proof of the main bound.

use std::fmt;
use std::path::Path;
use std::sync::Arc;

use nalgebra::DMatrix;
use rand_distr::{Cauchy, Distribution, Pareto, StandardNormal};
use serde::Serialize;
use statrs::distribution::{ContinuousCDF, Normal};
use libm::{erf, erfc};

use crate::error::{Error, Result};
use crate::rng::CounterRng;

/// Base family of an entry law.
#[derive(Debug, Clone, PartialEq)]
pub enum Family {
    Gaussian,
    Cauchy,
    /// Pareto with unit scale: support `[1, ∞)`, `P{X > x} = x^{-shape}`.
    Pareto { shape: f64 },
    Rademacher,
    Uniform { lo: f64, hi: f64 },
    /// Mass `p` at `x1`, mass `1 - p` at `x2`.
    TwoPoint { p: f64, x1: f64, x2: f64 },
    Constant(f64),
    /// Uniform resampling from a fixed list (kept sorted).
    Empirical(Arc<[f64]>),
}

/// An i.i.d. entry law `location + Y` with `Y` drawn from `family`.
///
/// `scale` is the window `α` of the anti-concentration hypothesis
/// `Q(a, α) ≤ 1 − β`; it does not change the samples. The construction
/// (case selection, interval detection) works with the normalized
/// variable `a / α`, for which the hypothesis reads `Q(a/α, 1) ≤ 1 − β`.
#[derive(Debug, Clone, PartialEq)]
pub struct EntryDistribution {
    pub family: Family,
    pub scale: f64,
    pub location: f64,
}

impl EntryDistribution {
    pub fn new(family: Family) -> Result<Self> {
        let d = Self { family, scale: 1.0, location: 0.0 };
        d.validate()?;
        Ok(d)
    }

    pub fn gaussian() -> Self {
        Self { family: Family::Gaussian, scale: 1.0, location: 0.0 }
    }

    pub fn cauchy() -> Self {
        Self { family: Family::Cauchy, scale: 1.0, location: 0.0 }
    }

    pub fn rademacher() -> Self {
        Self { family: Family::Rademacher, scale: 1.0, location: 0.0 }
    }

    pub fn constant(c: f64) -> Self {
        Self { family: Family::Constant(c), scale: 1.0, location: 0.0 }
    }

    pub fn pareto(shape: f64) -> Result<Self> {
        Self::new(Family::Pareto { shape })
    }

    pub fn uniform(lo: f64, hi: f64) -> Result<Self> {
        Self::new(Family::Uniform { lo, hi })
    }

    pub fn two_point(p: f64, x1: f64, x2: f64) -> Result<Self> {
        Self::new(Family::TwoPoint { p, x1, x2 })
    }

    pub fn empirical(mut samples: Vec<f64>) -> Result<Self> {
        if samples.iter().any(|x| !x.is_finite()) {
            return Err(Error::Config("empirical samples must be finite".into()));
        }
        samples.sort_by(f64::total_cmp);
        Self::new(Family::Empirical(samples.into()))
    }

    pub fn with_scale(mut self, scale: f64) -> Result<Self> {
        self.scale = scale;
        self.validate()?;
        Ok(self)
    }

    pub fn with_location(mut self, location: f64) -> Result<Self> {
        self.location = location;
        self.validate()?;
        Ok(self)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::Config(m.to_string()));
        if !(self.scale.is_finite() && self.scale > 0.0) {
            return bad("scale must be a positive finite real");
        }
        if !self.location.is_finite() {
            return bad("location must be finite");
        }
        match &self.family {
            Family::Pareto { shape } if !(shape.is_finite() && *shape > 0.0) => {
                bad("pareto shape must be > 0")
            }
            Family::Uniform { lo, hi } if !(lo.is_finite() && hi.is_finite() && lo < hi) => {
                bad("uniform requires finite a < b")
            }
            Family::TwoPoint { p, x1, x2 }
                if !(*p > 0.0 && *p < 1.0 && x1.is_finite() && x2.is_finite()) =>
            {
                bad("twopoint requires p in (0,1) and finite atoms")
            }
            Family::Constant(c) if !c.is_finite() => bad("constant must be finite"),
            Family::Empirical(s) if s.is_empty() => bad("empirical law needs at least one sample"),
            _ => Ok(()),
        }
    }

    /// Parses a CLI distribution spec: `gaussian`, `cauchy`, `pareto:a`,
    /// `rademacher`, `uniform:a,b`, `twopoint:p,x1,x2`, `constant:c` or
    /// `empirical:PATH` (newline-separated decimals).
    pub fn parse(spec: &str) -> Result<Self> {
        let spec = spec.trim();
        let (name, args) = match spec.split_once(':') {
            Some((n, a)) => (n.trim(), Some(a.trim())),
            None => (spec, None),
        };
        let nums = |expected: usize| -> Result<Vec<f64>> {
            let a = args.ok_or_else(|| Error::Parse(format!("`{name}` needs {expected} parameter(s)")))?;
            let v = a
                .split(',')
                .map(|t| t.trim().parse::<f64>().map_err(|e| Error::Parse(format!("`{t}`: {e}"))))
                .collect::<Result<Vec<_>>>()?;
            if v.len() != expected {
                return Err(Error::Parse(format!("`{name}` takes {expected} parameter(s), got {}", v.len())));
            }
            Ok(v)
        };
        let no_args = || -> Result<()> {
            match args {
                None => Ok(()),
                Some(_) => Err(Error::Parse(format!("`{name}` takes no parameters"))),
            }
        };
        match name {
            "gaussian" => no_args().map(|_| Self::gaussian()),
            "cauchy" => no_args().map(|_| Self::cauchy()),
            "rademacher" => no_args().map(|_| Self::rademacher()),
            "pareto" => {
                let v = nums(1)?;
                Self::pareto(v[0])
            }
            "uniform" => {
                let v = nums(2)?;
                Self::uniform(v[0], v[1])
            }
            "twopoint" => {
                let v = nums(3)?;
                Self::two_point(v[0], v[1], v[2])
            }
            "constant" => {
                let v = nums(1)?;
                Self::new(Family::Constant(v[0]))
            }
            "empirical" => {
                let path = args.ok_or_else(|| Error::Parse("`empirical` needs a PATH".into()))?;
                Self::empirical(read_samples(Path::new(path))?)
            }
            other => Err(Error::Parse(format!("unknown distribution `{other}`"))),
        }
    }

    /// One draw from the raw law.
    #[inline]
    pub fn sample(&self, rng: &mut CounterRng) -> f64 {
        self.location + self.sample_base(rng)
    }

    /// One draw of `Y` (the family without location).
    pub fn sample_base(&self, rng: &mut CounterRng) -> f64 {
        match &self.family {
            Family::Gaussian => StandardNormal.sample(rng),
            Family::Cauchy => Cauchy::new(0.0, 1.0).expect("unit cauchy").sample(rng),
            Family::Pareto { shape } => Pareto::new(1.0, *shape).expect("validated shape").sample(rng),
            Family::Rademacher => {
                if rng.next_word() & 1 == 0 {
                    -1.0
                } else {
                    1.0
                }
            }
            Family::Uniform { lo, hi } => lo + (hi - lo) * rng.next_unit(),
            Family::TwoPoint { p, x1, x2 } => {
                if rng.next_unit() < *p {
                    *x1
                } else {
                    *x2
                }
            }
            Family::Constant(c) => *c,
            Family::Empirical(s) => s[rng.next_index(s.len())],
        }
    }

    /// Law of the raw entry `a`.
    pub fn law(&self) -> Law<'_> {
        Law { family: &self.family, shift: self.location, mult: 1.0 }
    }

    /// Law of the normalized entry `a / α`.
    pub fn normalized_law(&self) -> Law<'_> {
        Law { family: &self.family, shift: self.location / self.scale, mult: 1.0 / self.scale }
    }

    /// Largest dyadic window `α = 2^-k ≤ 1` with `Q(a, α) ≤ 1 − β`, returned
    /// as a copy of `self` with that scale. `None` when no window down to
    /// `2^-60` works (e.g. a law with an atom of mass > 1 − β).
    pub fn calibrate_scale(&self, beta: f64) -> Option<Self> {
        let law = self.law();
        let mut alpha = 1.0f64;
        for _ in 0..=60 {
            if law.concentration(alpha) <= 1.0 - beta + Q_TOLERANCE {
                return Some(Self { scale: alpha, ..self.clone() });
            }
            alpha *= 0.5;
        }
        None
    }

    pub fn has_analytic_cdf(&self) -> bool {
        !matches!(self.family, Family::Empirical(_))
    }
}

impl fmt::Display for EntryDistribution {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.family {
            Family::Gaussian => write!(f, "gaussian")?,
            Family::Cauchy => write!(f, "cauchy")?,
            Family::Pareto { shape } => write!(f, "pareto:{shape}")?,
            Family::Rademacher => write!(f, "rademacher")?,
            Family::Uniform { lo, hi } => write!(f, "uniform:{lo},{hi}")?,
            Family::TwoPoint { p, x1, x2 } => write!(f, "twopoint:{p},{x1},{x2}")?,
            Family::Constant(c) => write!(f, "constant:{c}")?,
            Family::Empirical(s) => write!(f, "empirical[{}]", s.len())?,
        }
        if self.location != 0.0 {
            write!(f, "{:+}", self.location)?;
        }
        if self.scale != 1.0 {
            write!(f, " (alpha={})", self.scale)?;
        }
        Ok(())
    }
}

/// Reads newline-separated decimal reals; blank lines are skipped.
pub fn read_samples(path: &Path) -> Result<Vec<f64>> {
    let text = std::fs::read_to_string(path)?;
    text.lines()
        .map(str::trim)
        .filter(|l| !l.is_empty())
        .map(|l| l.parse::<f64>().map_err(|e| Error::Parse(format!("{}: `{l}`: {e}", path.display()))))
        .collect()
}

/// Slack allowed when comparing a computed `Q` against `1 − β`.
pub const Q_TOLERANCE: f64 = 1e-12;

/// The law of `shift + mult·Y`, `mult > 0`.
#[derive(Debug, Clone, Copy)]
pub struct Law<'a> {
    family: &'a Family,
    shift: f64,
    mult: f64,
}

impl Law<'_> {
    #[inline]
    fn to_base(&self, x: f64) -> f64 {
        (x - self.shift) / self.mult
    }

    pub fn is_empirical(&self) -> bool {
        matches!(self.family, Family::Empirical(_))
    }

    /// `P{X ≤ x}`.
    pub fn cdf(&self, x: f64) -> f64 {
        base_cdf(self.family, self.to_base(x), false)
    }

    /// `P{X < x}`.
    pub fn cdf_left(&self, x: f64) -> f64 {
        base_cdf(self.family, self.to_base(x), true)
    }

    /// `P{lo ≤ X ≤ hi}`; zero when `lo > hi`.
    pub fn prob_closed(&self, lo: f64, hi: f64) -> f64 {
        if lo > hi {
            return 0.0;
        }
        let (a, b) = (self.to_base(lo), self.to_base(hi));
        match self.family {
            Family::Empirical(s) => {
                let lo_idx = s.partition_point(|&v| v < a);
                let hi_idx = s.partition_point(|&v| v <= b);
                hi_idx.saturating_sub(lo_idx) as f64 / s.len() as f64
            }
            Family::Rademacher | Family::TwoPoint { .. } | Family::Constant(_) => atoms(self.family)
                .into_iter()
                .filter(|&(x, _)| a <= x && x <= b)
                .map(|(_, m)| m)
                .sum(),
            _ => (base_cdf(self.family, b, false) - base_cdf(self.family, a, true)).max(0.0),
        }
    }

    /// `E[X ; lo ≤ X ≤ hi]` (the partial expectation, not normalized).
    pub fn partial_mean(&self, lo: f64, hi: f64) -> f64 {
        if lo > hi {
            return 0.0;
        }
        let p = self.prob_closed(lo, hi);
        let (a, b) = (self.to_base(lo), self.to_base(hi));
        self.shift * p + self.mult * base_partial_mean(self.family, a, b)
    }

    /// Density of `X`, for continuous families.
    pub fn pdf(&self, x: f64) -> Option<f64> {
        let y = self.to_base(x);
        let d = match self.family {
            Family::Gaussian => (-0.5 * y * y).exp() / (2.0 * std::f64::consts::PI).sqrt(),
            Family::Cauchy => 1.0 / (std::f64::consts::PI * (1.0 + y * y)),
            Family::Pareto { shape } => {
                if y < 1.0 {
                    0.0
                } else {
                    shape * y.powf(-shape - 1.0)
                }
            }
            Family::Uniform { lo, hi } => {
                if y < *lo || y > *hi {
                    0.0
                } else {
                    1.0 / (hi - lo)
                }
            }
            _ => return None,
        };
        Some(d / self.mult)
    }

    /// Atoms `(x, mass)` of a purely atomic law (empty for continuous ones).
    pub fn atoms(&self) -> Vec<(f64, f64)> {
        atoms(self.family).into_iter().map(|(y, m)| (self.shift + self.mult * y, m)).collect()
    }

    /// Support points of an empirical law, mapped to `X`.
    pub fn samples(&self) -> Option<Vec<f64>> {
        match self.family {
            Family::Empirical(s) => Some(s.iter().map(|&y| self.shift + self.mult * y).collect()),
            _ => None,
        }
    }

    /// `inf{x : P{X ≤ x} ≥ p}` for `p ∈ (0, 1]`.
    ///
    /// For empirical laws this is the `⌈M·p⌉`-th order statistic.
    pub fn quantile(&self, p: f64) -> f64 {
        let y = match self.family {
            Family::Gaussian => gaussian_quantile(p),
            Family::Cauchy => (std::f64::consts::PI * (p - 0.5)).tan(),
            Family::Pareto { shape } => (1.0 - p).powf(-1.0 / shape),
            Family::Uniform { lo, hi } => lo + p * (hi - lo),
            Family::Empirical(s) => {
                let m = s.len();
                // smallest k with k/m >= p, evaluated with the same arithmetic as the cdf
                let mut k = ((m as f64) * p).ceil().clamp(1.0, m as f64) as usize;
                while k > 1 && (k - 1) as f64 / m as f64 >= p {
                    k -= 1;
                }
                while k < m && (k as f64) / (m as f64) < p {
                    k += 1;
                }
                s[k - 1]
            }
            _ => {
                let mut acc = 0.0;
                let atoms = atoms(self.family);
                let mut out = atoms.last().map(|a| a.0).unwrap_or(0.0);
                for (x, m) in atoms {
                    acc += m;
                    if acc >= p {
                        out = x;
                        break;
                    }
                }
                out
            }
        };
        self.shift + self.mult * y
    }

    /// Lévy concentration function `Q(X, α) = sup_λ P{|X − λ| ≤ α}`.
    ///
    /// Closed forms for the analytic families; the exact sample supremum
    /// for empirical laws.
    pub fn concentration(&self, alpha: f64) -> f64 {
        let a = alpha / self.mult;
        match self.family {
            Family::Gaussian => erf(a / std::f64::consts::SQRT_2).min(1.0),
            Family::Cauchy => (2.0 / std::f64::consts::PI * a.atan()).min(1.0),
            // the density is decreasing on [1, ∞), so the best window starts at 1
            Family::Pareto { shape } => 1.0 - (1.0 + 2.0 * a).powf(-shape),
            Family::Uniform { lo, hi } => (2.0 * a / (hi - lo)).min(1.0),
            Family::Empirical(s) => window_sup(s, a),
            _ => {
                let atoms = atoms(self.family);
                atoms
                    .iter()
                    .map(|&(x, _)| atoms.iter().filter(|&&(y, _)| y >= x && y <= x + 2.0 * a).map(|p| p.1).sum::<f64>())
                    .fold(0.0, f64::max)
            }
        }
    }
}

/// Standard normal quantile: statrs' approximation refined by Newton steps on
/// the accurate cdf, then moved up to the smallest float with `Φ(q) ≥ p`.
fn gaussian_quantile(p: f64) -> f64 {
    if p > 1.0 {
        return f64::NAN;
    }
    let phi = |x: f64| 0.5 * erfc(-x / std::f64::consts::SQRT_2);
    let mut q = Normal::standard().inverse_cdf(p).clamp(-38.0, 38.0);
    for _ in 0..3 {
        let dens = (-0.5 * q * q).exp() / (2.0 * std::f64::consts::PI).sqrt();
        if dens <= 0.0 {
            break;
        }
        q = (q - (phi(q) - p) / dens).clamp(-38.0, 38.0);
    }
    // bracket phi(lo) < p <= phi(hi), then bisect down to adjacent floats
    let mut step = 1e-12 * (1.0 + q.abs());
    let (mut lo, mut hi) = (q - step, q + step);
    while phi(lo) >= p && lo > -40.0 {
        step *= 2.0;
        lo -= step;
    }
    while phi(hi) < p && hi < 40.0 {
        step *= 2.0;
        hi += step;
    }
    while lo.next_up() < hi {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if phi(mid) >= p {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    hi
}

fn atoms(family: &Family) -> Vec<(f64, f64)> {
    let mut v = match family {
        Family::Rademacher => vec![(-1.0, 0.5), (1.0, 0.5)],
        Family::TwoPoint { p, x1, x2 } => {
            if x1 == x2 {
                vec![(*x1, 1.0)]
            } else {
                vec![(*x1, *p), (*x2, 1.0 - p)]
            }
        }
        Family::Constant(c) => vec![(*c, 1.0)],
        _ => Vec::new(),
    };
    v.sort_by(|a, b| a.0.total_cmp(&b.0));
    v
}

fn base_cdf(family: &Family, y: f64, strict: bool) -> f64 {
    match family {
        Family::Gaussian => 0.5 * erfc(-y / std::f64::consts::SQRT_2),
        Family::Cauchy => 0.5 + y.atan() / std::f64::consts::PI,
        Family::Pareto { shape } => {
            if y <= 1.0 {
                0.0
            } else {
                1.0 - y.powf(-shape)
            }
        }
        Family::Uniform { lo, hi } => ((y - lo) / (hi - lo)).clamp(0.0, 1.0),
        Family::Empirical(s) => {
            let k = if strict { s.partition_point(|&v| v < y) } else { s.partition_point(|&v| v <= y) };
            k as f64 / s.len() as f64
        }
        _ => atoms(family).into_iter().filter(|&(x, _)| if strict { x < y } else { x <= y }).map(|(_, m)| m).sum(),
    }
}

fn base_partial_mean(family: &Family, a: f64, b: f64) -> f64 {
    match family {
        Family::Gaussian => {
            let phi = |t: f64| (-0.5 * t * t).exp() / (2.0 * std::f64::consts::PI).sqrt();
            phi(a) - phi(b)
        }
        Family::Cauchy => ((1.0 + b * b).ln() - (1.0 + a * a).ln()) / (2.0 * std::f64::consts::PI),
        Family::Pareto { shape } => {
            let a = a.max(1.0);
            if a >= b {
                return 0.0;
            }
            if (*shape - 1.0).abs() < 1e-15 {
                (b / a).ln()
            } else {
                shape / (1.0 - shape) * (b.powf(1.0 - shape) - a.powf(1.0 - shape))
            }
        }
        Family::Uniform { lo, hi } => {
            let (a, b) = (a.max(*lo), b.min(*hi));
            if a >= b {
                0.0
            } else {
                (b * b - a * a) / (2.0 * (hi - lo))
            }
        }
        Family::Empirical(s) => {
            let lo_idx = s.partition_point(|&v| v < a);
            let hi_idx = s.partition_point(|&v| v <= b);
            if hi_idx <= lo_idx {
                0.0
            } else {
                s[lo_idx..hi_idx].iter().sum::<f64>() / s.len() as f64
            }
        }
        _ => atoms(family).into_iter().filter(|&(x, _)| a <= x && x <= b).map(|(x, m)| x * m).sum(),
    }
}

/// Largest fraction of a sorted sample inside a window `[x_i, x_i + 2α]`.
fn window_sup(sorted: &[f64], alpha: f64) -> f64 {
    let m = sorted.len();
    if m == 0 {
        return 0.0;
    }
    if 2.0 * alpha >= sorted[m - 1] - sorted[0] {
        return 1.0;
    }
    let mut best = 0usize;
    let mut hi = 0usize;
    for lo in 0..m {
        if hi < lo {
            hi = lo;
        }
        let edge = sorted[lo] + 2.0 * alpha;
        while hi < m && sorted[hi] <= edge {
            hi += 1;
        }
        best = best.max(hi - lo);
    }
    best as f64 / m as f64
}

/// Empirical concentration function at one window half-width.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ConcentrationQuery {
    pub alpha: f64,
    pub estimate: f64,
    pub sample_count: usize,
    /// 95% normal-approximation half width.
    pub ci_halfwidth: f64,
}

/// Exact empirical `sup_λ` fraction of samples in `[λ − α, λ + α]`.
///
/// The supremum over windows of width `2α` is attained by a window whose left
/// edge is a sample point, so a two-pointer sweep over the sorted samples is exact.
pub fn concentration_estimate(sorted_samples: &[f64], alpha: f64) -> Result<ConcentrationQuery> {
    if sorted_samples.is_empty() {
        return Err(Error::Argument("concentration estimate needs at least one sample".into()));
    }
    if !(alpha >= 0.0 && alpha.is_finite()) {
        return Err(Error::Argument(format!("alpha must be a non-negative real, got {alpha}")));
    }
    if sorted_samples.iter().any(|x| x.is_nan()) {
        return Err(Error::Argument("samples contain NaN".into()));
    }
    if sorted_samples.windows(2).any(|w| w[0] > w[1]) {
        return Err(Error::Argument("samples must be sorted ascending".into()));
    }
    let m = sorted_samples.len();
    let estimate = window_sup(sorted_samples, alpha);
    Ok(ConcentrationQuery {
        alpha,
        estimate,
        sample_count: m,
        ci_halfwidth: 1.96 * (estimate * (1.0 - estimate) / m as f64).sqrt(),
    })
}

/// Samples an `rows × cols` matrix; entry `(i, j)` uses its own counter stream
/// keyed by `(seed, i, j)`.
pub fn sample_matrix(dist: &EntryDistribution, rows: usize, cols: usize, seed: u64) -> Result<DMatrix<f64>> {
    dist.validate()?;
    sample_with(dist, rows, cols, seed, |d, rng| d.sample(rng))
}

/// Samples the location-free part `Y` of every entry.
pub fn sample_base_matrix(dist: &EntryDistribution, rows: usize, cols: usize, seed: u64) -> Result<DMatrix<f64>> {
    dist.validate()?;
    sample_with(dist, rows, cols, seed, |d, rng| d.sample_base(rng))
}

fn sample_with(
    dist: &EntryDistribution,
    rows: usize,
    cols: usize,
    seed: u64,
    draw: impl Fn(&EntryDistribution, &mut CounterRng) -> f64 + Sync,
) -> Result<DMatrix<f64>> {
    if cols == 0 || rows < cols {
        return Err(Error::Argument(format!("need N >= n >= 1, got {rows}x{cols}")));
    }
    let row = |i: usize| -> Vec<f64> {
        (0..cols).map(|j| draw(dist, &mut CounterRng::for_entry(seed, i, j))).collect()
    };
    #[cfg(feature = "parallel")]
    let data: Vec<Vec<f64>> = {
        use rayon::prelude::*;
        (0..rows).into_par_iter().map(row).collect()
    };
    #[cfg(not(feature = "parallel"))]
    let data: Vec<Vec<f64>> = (0..rows).map(row).collect();
    Ok(DMatrix::from_fn(rows, cols, |i, j| data[i][j]))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum CaseId {
    /// `P{z+1 ≤ ξ ≤ z+√N} < γ`.
    RightDeficient,
    /// `P{z−√N ≤ ξ ≤ z−1} < γ`.
    LeftDeficient,
    TwoSided,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CaseSelection {
    pub z: f64,
    /// The `β/2`-quantile of `ξ`; `z = quantile + 1`.
    pub quantile: f64,
    pub case_id: CaseId,
    pub gamma: f64,
    pub left_mass: f64,
    pub right_mass: f64,
    /// `Q(ξ, 1)` of the normalized law, as checked against `1 − β`.
    pub concentration: f64,
}

/// Picks the centre `z` (with `z − 1` a `β/2`-quantile of `ξ = a/α`) and the
/// case of the three-way split, with `γ = β/4`.
pub fn select_shift_and_case(dist: &EntryDistribution, beta: f64, n_rows: usize) -> Result<CaseSelection> {
    dist.validate()?;
    if !(beta > 0.0 && beta < 1.0) {
        return Err(Error::Argument(format!("beta must lie in (0,1), got {beta}")));
    }
    if n_rows < 4 {
        return Err(Error::Argument(format!("N must be at least 4, got {n_rows}")));
    }
    let law = dist.normalized_law();
    let q = law.concentration(1.0);
    if q > 1.0 - beta + Q_TOLERANCE {
        return Err(Error::Precondition(format!(
            "anti-concentration fails: Q(xi,1) = {q} > 1 - beta = {}",
            1.0 - beta
        )));
    }
    let quantile = law.quantile(beta / 2.0);
    let z = quantile + 1.0;
    let root = (n_rows as f64).sqrt();
    let left_mass = law.prob_closed(z - root, z - 1.0);
    let right_mass = law.prob_closed(z + 1.0, z + root);
    let gamma = beta / 4.0;
    let case_id = if left_mass.min(right_mass) >= gamma {
        CaseId::TwoSided
    } else if right_mass < gamma {
        CaseId::RightDeficient
    } else {
        CaseId::LeftDeficient
    };
    Ok(CaseSelection { z, quantile, case_id, gamma, left_mass, right_mass, concentration: q })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn constant_matrix_is_constant() {
        let m = sample_matrix(&EntryDistribution::constant(5.0), 2, 2, 7).unwrap();
        assert_eq!(m, DMatrix::from_element(2, 2, 5.0));
    }

    #[test]
    fn sampling_is_deterministic() {
        let d = EntryDistribution::rademacher();
        assert_eq!(sample_matrix(&d, 3, 2, 1).unwrap(), sample_matrix(&d, 3, 2, 1).unwrap());
        assert_ne!(sample_matrix(&d, 30, 20, 1).unwrap(), sample_matrix(&d, 30, 20, 2).unwrap());
    }

    #[test]
    fn cauchy_abs_median_near_one() {
        let m = sample_matrix(&EntryDistribution::cauchy(), 100, 50, 42).unwrap();
        let mut v: Vec<f64> = m.iter().map(|x| x.abs()).collect();
        v.sort_by(f64::total_cmp);
        let med = 0.5 * (v[2499] + v[2500]);
        assert!((med - 1.0).abs() < 0.2, "median {med}");
    }

    #[test]
    fn invalid_shape_rejected() {
        assert!(matches!(EntryDistribution::pareto(0.0), Err(Error::Config(_))));
        assert!(matches!(EntryDistribution::uniform(1.0, 1.0), Err(Error::Config(_))));
        assert!(EntryDistribution::two_point(1.0, 0.0, 1.0).is_err());
    }

    #[test]
    fn wrong_shape_rejected() {
        assert!(sample_matrix(&EntryDistribution::gaussian(), 2, 3, 0).is_err());
        assert!(sample_matrix(&EntryDistribution::gaussian(), 2, 0, 0).is_err());
    }

    #[test]
    fn parse_specs() {
        assert_eq!(EntryDistribution::parse("gaussian").unwrap().family, Family::Gaussian);
        assert_eq!(EntryDistribution::parse("pareto:1.5").unwrap().family, Family::Pareto { shape: 1.5 });
        assert_eq!(
            EntryDistribution::parse("twopoint:0.5,-1,3").unwrap().family,
            Family::TwoPoint { p: 0.5, x1: -1.0, x2: 3.0 }
        );
        assert_eq!(EntryDistribution::parse(" uniform:0,10 ").unwrap().family, Family::Uniform { lo: 0.0, hi: 10.0 });
        assert!(EntryDistribution::parse("pareto:-1").is_err());
        assert!(EntryDistribution::parse("uniform:1").is_err());
        assert!(EntryDistribution::parse("gaussian:1").is_err());
        assert!(EntryDistribution::parse("levy").is_err());
    }

    #[test]
    fn parse_empirical_file() {
        let dir = std::env::temp_dir().join(format!("ssv-emp-{}", std::process::id()));
        std::fs::create_dir_all(&dir).unwrap();
        let p = dir.join("s.txt");
        std::fs::write(&p, "3\n1.5\n\n-2\n").unwrap();
        let d = EntryDistribution::parse(&format!("empirical:{}", p.display())).unwrap();
        match d.family {
            Family::Empirical(s) => assert_eq!(&*s, &[-2.0, 1.5, 3.0]),
            _ => unreachable!(),
        }
    }

    #[test]
    fn estimate_on_integers() {
        let s: Vec<f64> = (0..10).map(f64::from).collect();
        assert_abs_diff_eq!(concentration_estimate(&s, 0.5).unwrap().estimate, 0.2);
        assert_abs_diff_eq!(concentration_estimate(&s, 4.5).unwrap().estimate, 1.0);
        assert_abs_diff_eq!(concentration_estimate(&s, 0.0).unwrap().estimate, 0.1);
    }

    #[test]
    fn estimate_rejects_bad_input() {
        assert!(concentration_estimate(&[], 1.0).is_err());
        assert!(concentration_estimate(&[2.0, 1.0], 1.0).is_err());
        assert!(concentration_estimate(&[1.0], -1.0).is_err());
    }

    #[test]
    fn uniform_estimate_matches_two_alpha() {
        let d = EntryDistribution::uniform(0.0, 1.0).unwrap();
        let mut rng = CounterRng::new(11);
        let mut s: Vec<f64> = (0..100_000).map(|_| d.sample(&mut rng)).collect();
        s.sort_by(f64::total_cmp);
        let q = concentration_estimate(&s, 0.1).unwrap();
        assert!((q.estimate - 0.2).abs() <= 0.02, "{q:?}");
        assert!(q.ci_halfwidth > 0.0 && q.ci_halfwidth < 0.01);
    }

    #[test]
    fn quantile_cdf_consistency() {
        let laws = [
            EntryDistribution::gaussian(),
            EntryDistribution::cauchy(),
            EntryDistribution::pareto(1.5).unwrap(),
            EntryDistribution::uniform(-2.0, 3.0).unwrap(),
            EntryDistribution::two_point(0.3, -1.0, 4.0).unwrap(),
            EntryDistribution::rademacher(),
            EntryDistribution::constant(2.0),
        ];
        for d in &laws {
            let law = d.law();
            for k in -40..=40 {
                let x = k as f64 * 0.25;
                let p = law.cdf(x);
                if p > 0.0 {
                    let q = law.quantile(p);
                    assert!(q <= x + 1e-9 * (1.0 + x.abs()), "{d}: quantile(cdf({x})) = {q}");
                    // right limit: the cdf at q reaches p
                    assert!(law.cdf(q) >= p - 1e-12, "{d}: cdf(q) < p at {x}");
                }
                assert!(law.cdf_left(x) <= law.cdf(x));
            }
        }
    }

    #[test]
    fn analytic_concentration_values() {
        assert_abs_diff_eq!(EntryDistribution::rademacher().law().concentration(1.0), 1.0);
        assert_abs_diff_eq!(EntryDistribution::rademacher().law().concentration(0.5), 0.5);
        assert_abs_diff_eq!(EntryDistribution::cauchy().law().concentration(1.0), 0.5, epsilon = 1e-15);
        assert_abs_diff_eq!(EntryDistribution::pareto(1.0).unwrap().law().concentration(1.0), 2.0 / 3.0, epsilon = 1e-15);
        assert_abs_diff_eq!(EntryDistribution::uniform(0.0, 10.0).unwrap().law().concentration(1.0), 0.2);
        let g = EntryDistribution::gaussian().law().concentration(1.0);
        assert_abs_diff_eq!(g, 0.682_689_492_137_085_9, epsilon = 1e-13);
    }

    #[test]
    fn calibrated_scales() {
        assert_eq!(EntryDistribution::rademacher().calibrate_scale(0.5).unwrap().scale, 0.5);
        assert_eq!(EntryDistribution::pareto(1.0).unwrap().calibrate_scale(0.5).unwrap().scale, 0.5);
        assert_eq!(EntryDistribution::cauchy().calibrate_scale(0.5).unwrap().scale, 1.0);
        assert!(EntryDistribution::constant(0.0).calibrate_scale(0.5).is_none());
    }

    #[test]
    fn partial_means_closed_forms() {
        let g = EntryDistribution::gaussian();
        assert_abs_diff_eq!(g.law().partial_mean(-3.0, 3.0), 0.0, epsilon = 1e-15);
        let u = EntryDistribution::uniform(0.0, 2.0).unwrap();
        assert_abs_diff_eq!(u.law().partial_mean(0.0, 2.0), 1.0, epsilon = 1e-15);
        let t = EntryDistribution::two_point(0.5, -1.0, 3.0).unwrap();
        assert_abs_diff_eq!(t.law().partial_mean(-2.0, 4.0), 1.0);
        let shifted = EntryDistribution::uniform(0.0, 2.0).unwrap().with_location(5.0).unwrap();
        assert_abs_diff_eq!(shifted.law().partial_mean(5.0, 7.0), 6.0, epsilon = 1e-14);
    }

    #[test]
    fn case_selection_uniform() {
        let d = EntryDistribution::uniform(0.0, 10.0).unwrap();
        let c = select_shift_and_case(&d, 0.5, 16).unwrap();
        assert_abs_diff_eq!(c.z, 3.5);
        assert_abs_diff_eq!(c.left_mass, 0.25, epsilon = 1e-15);
        assert_abs_diff_eq!(c.right_mass, 0.30, epsilon = 1e-15);
        assert_abs_diff_eq!(c.gamma, 0.125);
        assert_eq!(c.case_id, CaseId::TwoSided);
    }

    #[test]
    fn case_selection_constant_fails() {
        let err = select_shift_and_case(&EntryDistribution::constant(0.0), 0.5, 16).unwrap_err();
        match err {
            Error::Precondition(m) => assert!(m.contains("Q(xi,1) = 1"), "{m}"),
            e => panic!("unexpected {e}"),
        }
    }

    #[test]
    fn case_selection_two_point_right_deficient() {
        let d = EntryDistribution::two_point(0.9, 0.0, 100.0).unwrap();
        let c = select_shift_and_case(&d, 0.05, 100).unwrap();
        assert_eq!(c.z, 1.0);
        assert_eq!(c.right_mass, 0.0);
        assert_abs_diff_eq!(c.left_mass, 0.9);
        assert_abs_diff_eq!(c.gamma, 0.0125);
        assert_eq!(c.case_id, CaseId::RightDeficient);
    }

    #[test]
    fn empirical_quantile_matches_order_statistic() {
        let samples: Vec<f64> = (1..=100).map(f64::from).collect();
        let d = EntryDistribution::empirical(samples).unwrap();
        let c = select_shift_and_case(&d, 0.14, 16).unwrap();
        // ⌈100 · 0.07⌉ = 7th order statistic
        assert_eq!(c.z - 1.0, 7.0);
        let law = d.law();
        assert!(law.cdf(c.z - 1.0) >= 0.07);
        assert!(law.cdf_left(c.z - 1.0) <= 0.07);
    }
}
