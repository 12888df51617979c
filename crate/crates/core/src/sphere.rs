//! Sphere decomposition (peaky / almost sparse / spread), the spread witness,
//! and grid ε-nets, dense and sparsified.

use std::collections::HashSet;
use std::fmt::Write as _;

use serde::Serialize;

use crate::bounds::ConstantsConfig;
use crate::error::{Error, Result};
use crate::rng::CounterRng;

/// Tolerance on `‖y‖ − 1` for inputs claimed to be unit vectors.
pub const UNIT_TOLERANCE: f64 = 1e-9;
/// Largest dense grid dimension.
pub const MAX_GRID_DIM: usize = 10;
/// Largest number of grid cells visited by one net construction.
pub const MAX_GRID_CELLS: u64 = 10_000_000;
/// Largest number of supports the enumerate policy may visit.
pub const MAX_SUPPORTS: u64 = 100_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Label {
    Peaky,
    AlmostSparse,
    Spread,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct VectorClass {
    pub label: Label,
    pub theta: f64,
    pub m: usize,
}

fn check_unit(y: &[f64]) -> Result<()> {
    let norm = norm2(y);
    if !((norm - 1.0).abs() <= UNIT_TOLERANCE) {
        return Err(Error::Argument(format!("expected a unit vector, got norm {norm}")));
    }
    Ok(())
}

pub fn norm2(y: &[f64]) -> f64 {
    y.iter().map(|v| v * v).sum::<f64>().sqrt()
}

pub fn norm_inf(y: &[f64]) -> f64 {
    y.iter().fold(0.0, |a, v| a.max(v.abs()))
}

/// Sum of the `m` largest `y_j²`.
pub fn top_m_square_sum(y: &[f64], m: usize) -> f64 {
    let mut sq: Vec<f64> = y.iter().map(|v| v * v).collect();
    let m = m.min(sq.len());
    if m == 0 {
        return 0.0;
    }
    if m < sq.len() {
        sq.select_nth_unstable_by(m - 1, |a, b| b.total_cmp(a));
    }
    sq[..m].iter().sum()
}

/// Whether a unit vector has an `m`-sparse restriction of norm at least 1/2.
pub fn is_almost_sparse(y: &[f64], m: usize) -> bool {
    top_m_square_sum(y, m) >= 0.25
}

pub fn classify_vector(y: &[f64], theta: f64, m: usize) -> Result<VectorClass> {
    check_unit(y)?;
    if !(theta > 0.0) {
        return Err(Error::Argument(format!("theta must be positive, got {theta}")));
    }
    if m == 0 || m > y.len() {
        return Err(Error::Argument(format!("m must lie in [1, {}], got {m}", y.len())));
    }
    let label = if norm_inf(y) >= theta {
        Label::Peaky
    } else if is_almost_sparse(y, m) {
        Label::AlmostSparse
    } else {
        Label::Spread
    };
    Ok(VectorClass { label, theta, m })
}

/// `⌊√N⌋`.
pub fn isqrt(n: usize) -> usize {
    let mut r = (n as f64).sqrt() as usize;
    while r * r > n {
        r -= 1;
    }
    while (r + 1) * (r + 1) <= n {
        r += 1;
    }
    r
}

/// `⌊N^{1/4}⌋`.
pub fn iquartic_root(n: usize) -> usize {
    isqrt(isqrt(n))
}

/// Block of largest norm among the consecutive `m`-blocks of
/// `J' = {j : |y_j| ≤ 1/⌊N^{1/4}⌋}` (zero-based, index order). No precondition check.
pub fn witness_block(y: &[f64], m: usize, n_rows: usize) -> Vec<usize> {
    let cap = 1.0 / iquartic_root(n_rows).max(1) as f64;
    let small: Vec<usize> = (0..y.len()).filter(|&j| y[j].abs() <= cap).collect();
    let mut best: Vec<usize> = Vec::new();
    let mut best_sq = -1.0;
    for block in small.chunks(m.max(1)) {
        let sq: f64 = block.iter().map(|&j| y[j] * y[j]).sum();
        if sq > best_sq {
            best_sq = sq;
            best = block.to_vec();
        }
    }
    best
}

/// A set `J`, `|J| ≤ m`, with `‖yχ_J‖ ≥ ½√(m/n)` and `‖yχ_J‖_∞ ≤ 1/⌊N^{1/4}⌋`,
/// for `y` not almost `⌊√N⌋`-sparse.
pub fn spread_witness(y: &[f64], m: usize, n_rows: usize) -> Result<Vec<usize>> {
    check_unit(y)?;
    let n = y.len();
    if !(n_rows >= n && n >= m && m >= 1) {
        return Err(Error::Argument(format!("need N >= n >= m >= 1, got N={n_rows}, n={n}, m={m}")));
    }
    let s = isqrt(n_rows);
    if is_almost_sparse(y, s) {
        return Err(Error::Precondition(format!("y is almost {s}-sparse")));
    }
    Ok(witness_block(y, m, n_rows))
}

/// A subset of `ℝ^d` described by norm constraints:
/// `r_min ≤ ‖x‖ ≤ r_max`, `‖x‖_∞ ≤ linf_max`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ShellRegion {
    pub r_min: f64,
    pub r_max: f64,
    pub linf_max: f64,
}

/// Relative slack used by [`ShellRegion::contains`] for points produced by rounding.
const REGION_SLACK: f64 = 1e-12;

impl ShellRegion {
    pub fn ball() -> Self {
        Self { r_min: 0.0, r_max: 1.0, linf_max: f64::INFINITY }
    }

    pub fn sphere() -> Self {
        Self { r_min: 1.0, r_max: 1.0, linf_max: f64::INFINITY }
    }

    pub fn new(r_min: f64, r_max: f64, linf_max: f64) -> Result<Self> {
        if !(r_min >= 0.0 && r_min <= r_max && r_max <= 1.0 && linf_max > 0.0) {
            return Err(Error::Argument(format!(
                "invalid region r_min={r_min}, r_max={r_max}, linf_max={linf_max} (need 0 <= r_min <= r_max <= 1)"
            )));
        }
        Ok(Self { r_min, r_max, linf_max })
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        let n = norm2(x);
        n >= self.r_min * (1.0 - REGION_SLACK)
            && n <= self.r_max * (1.0 + REGION_SLACK)
            && norm_inf(x) <= self.linf_max * (1.0 + REGION_SLACK)
    }

    /// A member of `region ∩ cell`, or `None` when they do not meet.
    /// `lo`/`hi` are the cell corners.
    fn representative(&self, lo: &[f64], hi: &[f64]) -> Option<Vec<f64>> {
        let d = lo.len();
        let mut clo = vec![0.0; d];
        let mut chi = vec![0.0; d];
        for k in 0..d {
            clo[k] = lo[k].max(-self.linf_max);
            chi[k] = hi[k].min(self.linf_max);
            if clo[k] > chi[k] {
                return None;
            }
        }
        let near: Vec<f64> = (0..d).map(|k| 0f64.clamp(clo[k], chi[k])).collect();
        let far: Vec<f64> = (0..d).map(|k| if clo[k].abs() > chi[k].abs() { clo[k] } else { chi[k] }).collect();
        let (n_near, n_far) = (norm2(&near), norm2(&far));
        if n_near > self.r_max || n_far < self.r_min {
            return None;
        }
        if n_near >= self.r_min {
            return Some(near);
        }
        // walk from the nearest point toward the farthest corner until the norm reaches r_min
        let dir: Vec<f64> = far.iter().zip(&near).map(|(f, n)| f - n).collect();
        let a: f64 = dir.iter().map(|v| v * v).sum();
        let b: f64 = 2.0 * dir.iter().zip(&near).map(|(u, v)| u * v).sum::<f64>();
        let c = n_near * n_near - self.r_min * self.r_min;
        let t = ((-b + (b * b - 4.0 * a * c).max(0.0).sqrt()) / (2.0 * a)).clamp(0.0, 1.0);
        let mut p: Vec<f64> = near.iter().zip(&dir).map(|(n, u)| n + t * u).collect();
        // rounding can leave the norm a hair below r_min; push toward the far corner
        let np = norm2(&p);
        if np < self.r_min && np > 0.0 {
            let s = self.r_min / np;
            let scaled: Vec<f64> = p.iter().map(|v| v * s).collect();
            if scaled.iter().zip(clo.iter().zip(&chi)).all(|(v, (l, h))| *l <= *v && *v <= *h) {
                p = scaled;
            }
        }
        Some(p)
    }
}

/// A net point stored sparsely: `values[k]` sits at coordinate `support[k]`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NetPoint {
    /// Exact nonzero set, increasing.
    pub support: Vec<usize>,
    pub values: Vec<f64>,
}

impl NetPoint {
    fn from_dense(x: &[f64], coords: &[usize]) -> Self {
        let mut support = Vec::new();
        let mut values = Vec::new();
        for (k, &v) in x.iter().enumerate() {
            if v != 0.0 {
                support.push(coords[k]);
                values.push(v);
            }
        }
        Self { support, values }
    }

    pub fn dense(&self, n: usize) -> Vec<f64> {
        let mut y = vec![0.0; n];
        for (&j, &v) in self.support.iter().zip(&self.values) {
            y[j] = v;
        }
        y
    }

    pub fn norm(&self) -> f64 {
        norm2(&self.values)
    }

    /// `‖yχ_{supp y'} − y'‖`.
    pub fn projected_distance(&self, y: &[f64]) -> f64 {
        self.support
            .iter()
            .zip(&self.values)
            .map(|(&j, &v)| (y[j] - v).powi(2))
            .sum::<f64>()
            .sqrt()
    }

    fn key(&self) -> (Vec<usize>, Vec<u64>) {
        (self.support.clone(), self.values.iter().map(|v| v.to_bits()).collect())
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct Net {
    pub n: usize,
    pub points: Vec<NetPoint>,
    pub epsilon: f64,
    pub m: usize,
    /// Informational size bound: `(3/ε)^dim` for dense nets,
    /// `(C·n/(ε·m))^m` for sparsified ones.
    pub cardinality_bound: f64,
    /// Grid cells visited during construction.
    pub cells_visited: u64,
}

impl Net {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Smallest projected distance `‖yχ_{supp y'} − y'‖` over the net.
    pub fn nearest_projected(&self, y: &[f64]) -> f64 {
        self.points.iter().map(|p| p.projected_distance(y)).fold(f64::INFINITY, f64::min)
    }

    /// One line per point, `j1:v1;j2:v2;...` with zero-based indices.
    /// The zero vector is an empty line.
    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        for p in &self.points {
            for (k, (&j, &v)) in p.support.iter().zip(&p.values).enumerate() {
                if k > 0 {
                    out.push(';');
                }
                let _ = write!(out, "{j}:{v:?}");
            }
            out.push('\n');
        }
        out
    }

    /// Inverse of [`Net::to_csv`]; `epsilon` and `m` are supplied by the caller.
    pub fn from_csv(text: &str, n: usize, epsilon: f64) -> Result<Self> {
        let mut points = Vec::new();
        for (lineno, line) in text.lines().enumerate() {
            let line = line.trim();
            let mut pairs: Vec<(usize, f64)> = Vec::new();
            if !line.is_empty() {
                for piece in line.split(';') {
                    let (j, v) = piece
                        .split_once(':')
                        .ok_or_else(|| Error::Parse(format!("net line {}: `{piece}` is not j:v", lineno + 1)))?;
                    let j: usize = j.trim().parse().map_err(|e| Error::Parse(format!("net line {}: {e}", lineno + 1)))?;
                    let v: f64 = v.trim().parse().map_err(|e| Error::Parse(format!("net line {}: {e}", lineno + 1)))?;
                    if j >= n {
                        return Err(Error::Parse(format!("net line {}: index {j} out of range for n = {n}", lineno + 1)));
                    }
                    if v != 0.0 {
                        pairs.push((j, v));
                    }
                }
            }
            pairs.sort_by_key(|p| p.0);
            if pairs.windows(2).any(|w| w[0].0 == w[1].0) {
                return Err(Error::Parse(format!("net line {}: repeated index", lineno + 1)));
            }
            points.push(NetPoint { support: pairs.iter().map(|p| p.0).collect(), values: pairs.iter().map(|p| p.1).collect() });
        }
        let m = points.iter().map(|p| p.support.len()).max().unwrap_or(0);
        Ok(Self { n, points, epsilon, m, cardinality_bound: f64::NAN, cells_visited: 0 })
    }
}

/// Grid pitch giving cell diameter at most `ε`.
fn pitch(dim: usize, epsilon: f64) -> f64 {
    epsilon / (dim as f64).sqrt() * (1.0 - 1e-12)
}

/// Grid cell index range `[k_lo, k_hi)` covering `[−L, L]` with pitch `h`.
fn cell_range(l: f64, h: f64) -> (i64, i64) {
    ((-l / h).floor() as i64, (l / h).ceil() as i64)
}

fn grid_cells(dim: usize, region: &ShellRegion, epsilon: f64) -> (f64, (i64, i64), u64) {
    let h = pitch(dim, epsilon);
    let l = region.r_max.min(region.linf_max);
    let range = cell_range(l, h);
    let per_dim = (range.1 - range.0).max(0) as u64;
    let total = per_dim.checked_pow(dim as u32).unwrap_or(u64::MAX);
    (h, range, total)
}

/// Grid net of `region ⊂ ℝ^dim` embedded at coordinates `coords` of `ℝ^n`.
fn grid_points(region: &ShellRegion, epsilon: f64, coords: &[usize], out: &mut Vec<NetPoint>, seen: &mut HashSet<(Vec<usize>, Vec<u64>)>) -> u64 {
    let dim = coords.len();
    let (h, (k_lo, k_hi), _) = grid_cells(dim, region, epsilon);
    if k_hi <= k_lo {
        return 0;
    }
    let mut idx = vec![k_lo; dim];
    let mut lo = vec![0.0; dim];
    let mut hi = vec![0.0; dim];
    let mut visited = 0u64;
    loop {
        for k in 0..dim {
            lo[k] = idx[k] as f64 * h;
            hi[k] = (idx[k] + 1) as f64 * h;
        }
        visited += 1;
        if let Some(p) = region.representative(&lo, &hi) {
            let point = NetPoint::from_dense(&p, coords);
            if seen.insert(point.key()) {
                out.push(point);
            }
        }
        // odometer
        let mut k = 0;
        loop {
            if k == dim {
                return visited;
            }
            idx[k] += 1;
            if idx[k] < k_hi {
                break;
            }
            idx[k] = k_lo;
            k += 1;
        }
    }
}

/// Grid ε-net of `region ⊂ B₂^dim`: cells of diameter ε meeting the region,
/// each contributing one member point.
pub fn ball_net(dim: usize, epsilon: f64, region: &ShellRegion) -> Result<Net> {
    if dim == 0 {
        return Err(Error::Argument("dim must be positive".into()));
    }
    if dim > MAX_GRID_DIM {
        return Err(Error::Resource(format!("dense grid nets are limited to dim <= {MAX_GRID_DIM}, got {dim}")));
    }
    if !(epsilon > 0.0 && epsilon <= 1.0) {
        return Err(Error::Argument(format!("epsilon must lie in (0,1], got {epsilon}")));
    }
    let (_, _, cells) = grid_cells(dim, region, epsilon);
    if cells > MAX_GRID_CELLS {
        return Err(Error::Resource(format!("grid needs {cells} cells, limit {MAX_GRID_CELLS}")));
    }
    let coords: Vec<usize> = (0..dim).collect();
    let mut points = Vec::new();
    let visited = grid_points(region, epsilon, &coords, &mut points, &mut HashSet::new());
    Ok(Net {
        n: dim,
        points,
        epsilon,
        m: dim,
        cardinality_bound: (3.0 / epsilon).powi(dim as i32),
        cells_visited: visited,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SupportPolicy {
    /// Every `m`-subset of coordinates.
    Enumerate,
    /// `count` distinct `m`-subsets drawn uniformly from a seeded stream.
    Sample { count: usize, seed: u64 },
}

/// `C(n, k)`, saturating.
pub fn binomial(n: usize, k: usize) -> u64 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = acc * (n - i) as u128 / (i + 1) as u128;
        if acc > u64::MAX as u128 {
            return u64::MAX;
        }
    }
    acc as u64
}

/// All `k`-subsets of `0..n` in lexicographic order.
pub fn subsets(n: usize, k: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    if k > n {
        return out;
    }
    let mut cur: Vec<usize> = (0..k).collect();
    loop {
        out.push(cur.clone());
        let Some(i) = (0..k).rev().find(|&i| cur[i] < n - k + i) else {
            return out;
        };
        cur[i] += 1;
        for t in i + 1..k {
            cur[t] = cur[t - 1] + 1;
        }
    }
}

fn sampled_subsets(n: usize, k: usize, count: usize, seed: u64) -> Vec<Vec<usize>> {
    let total = binomial(n, k);
    let target = (count as u64).min(total) as usize;
    let mut rng = CounterRng::new(seed);
    let mut seen = HashSet::new();
    let mut out = Vec::new();
    while out.len() < target {
        // partial Fisher-Yates
        let mut pool: Vec<usize> = (0..n).collect();
        for i in 0..k {
            let r = i + rng.next_index(n - i);
            pool.swap(i, r);
        }
        let mut s = pool[..k].to_vec();
        s.sort_unstable();
        if seen.insert(s.clone()) {
            out.push(s);
        }
    }
    out
}

/// Union over supports `J`, `|J| = min(m, n)`, of grid nets of `region ∩ span{e_j}_{j∈J}`.
///
/// Every `x ∈ region` with `|supp x| ≤ m` has a net point `y'` with
/// `supp y' ⊂ J ⊇ supp x` and `‖x − y'‖ ≤ ε`, hence `‖yχ_{supp y'} − y'‖ ≤ ε`
/// for any `y` with `yχ_{supp x} = x`.
pub fn sparsified_net(n: usize, m: usize, epsilon: f64, region: &ShellRegion, policy: SupportPolicy) -> Result<Net> {
    if m == 0 || m > n {
        return Err(Error::Argument(format!("need 1 <= m <= n, got m={m}, n={n}")));
    }
    if !(epsilon > 0.0 && epsilon <= 1.0) {
        return Err(Error::Argument(format!("epsilon must lie in (0,1], got {epsilon}")));
    }
    if m > MAX_GRID_DIM {
        return Err(Error::Resource(format!("per-support grids are limited to m <= {MAX_GRID_DIM}, got {m}")));
    }
    let supports = match policy {
        SupportPolicy::Enumerate => {
            let count = binomial(n, m);
            if count > MAX_SUPPORTS {
                return Err(Error::Resource(format!(
                    "C({n},{m}) = {count} supports exceeds {MAX_SUPPORTS}; use the sample policy"
                )));
            }
            subsets(n, m)
        }
        SupportPolicy::Sample { count, seed } => sampled_subsets(n, m, count, seed),
    };
    let (_, _, per_support) = grid_cells(m, region, epsilon);
    let total = per_support.saturating_mul(supports.len() as u64);
    if total > MAX_GRID_CELLS {
        return Err(Error::Resource(format!("net needs {total} grid cells, limit {MAX_GRID_CELLS}")));
    }
    let mut points = Vec::new();
    let mut seen = HashSet::new();
    let mut visited = 0;
    for j in &supports {
        visited += grid_points(region, epsilon, j, &mut points, &mut seen);
    }
    let c_net = ConstantsConfig::default().c_net;
    Ok(Net {
        n,
        points,
        epsilon,
        m,
        cardinality_bound: (c_net * n as f64 / (epsilon * m as f64)).powi(m as i32),
        cells_visited: visited,
    })
}
