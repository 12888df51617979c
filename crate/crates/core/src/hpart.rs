//! H-parts of scalars and matrices, the regular/irregular splitting
//! `A + B = Γ + Ξ`, and generators of the subspace `(M+M')(E^⊥) + (⟨M⟩_H̄+M')(E)`
//! for coordinate subspaces `E`.

use std::fmt;
use std::str::FromStr;

use nalgebra::DMatrix;
use serde::{Serialize, Serializer};

use crate::error::{Error, Result};

/// A finite union of closed, sorted, strictly disjoint intervals.
#[derive(Debug, Clone, PartialEq)]
pub struct IntervalUnion {
    intervals: Vec<(f64, f64)>,
}

impl IntervalUnion {
    pub fn new(intervals: Vec<(f64, f64)>) -> Result<Self> {
        for &(lo, hi) in &intervals {
            if lo.is_nan() || hi.is_nan() || lo > hi {
                return Err(Error::Argument(format!("invalid interval [{lo}, {hi}]")));
            }
        }
        for w in intervals.windows(2) {
            if !(w[0].1 < w[1].0) {
                return Err(Error::Argument(format!(
                    "intervals must be sorted and disjoint: [{}, {}] then [{}, {}]",
                    w[0].0, w[0].1, w[1].0, w[1].1
                )));
            }
        }
        Ok(Self { intervals })
    }

    pub fn single(lo: f64, hi: f64) -> Result<Self> {
        Self::new(vec![(lo, hi)])
    }

    /// Union of two unions; fails if they overlap or touch.
    pub fn union(&self, other: &Self) -> Result<Self> {
        let mut all: Vec<(f64, f64)> = self.intervals.iter().chain(&other.intervals).copied().collect();
        all.sort_by(|a, b| a.0.total_cmp(&b.0));
        Self::new(all)
    }

    pub fn empty() -> Self {
        Self { intervals: Vec::new() }
    }

    pub fn intervals(&self) -> &[(f64, f64)] {
        &self.intervals
    }

    #[inline]
    pub fn contains(&self, x: f64) -> bool {
        self.intervals.iter().any(|&(lo, hi)| lo <= x && x <= hi)
    }

    /// `max(|lo_min|, |hi_max|)`, the largest magnitude of a member.
    pub fn sup_abs(&self) -> f64 {
        match (self.intervals.first(), self.intervals.last()) {
            (Some(f), Some(l)) => f.0.abs().max(l.1.abs()),
            _ => 0.0,
        }
    }

    /// Translates every interval by `c`.
    pub fn shifted(&self, c: f64) -> Self {
        Self { intervals: self.intervals.iter().map(|&(lo, hi)| (lo + c, hi + c)).collect() }
    }

    /// Euclidean distance between two sets (0 if they intersect).
    pub fn distance_to(&self, other: &Self) -> f64 {
        let mut best = f64::INFINITY;
        for &(a, b) in &self.intervals {
            for &(c, d) in &other.intervals {
                let gap = if b < c {
                    c - b
                } else if d < a {
                    a - d
                } else {
                    0.0
                };
                best = best.min(gap);
            }
        }
        best
    }
}

impl fmt::Display for IntervalUnion {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (k, (lo, hi)) in self.intervals.iter().enumerate() {
            if k > 0 {
                f.write_str(",")?;
            }
            write!(f, "{lo}:{hi}")?;
        }
        Ok(())
    }
}

impl FromStr for IntervalUnion {
    type Err = Error;

    /// `lo1:hi1,lo2:hi2,...`
    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        if s.is_empty() {
            return Ok(Self::empty());
        }
        let parse = |t: &str| t.trim().parse::<f64>().map_err(|e| Error::Parse(format!("`{t}`: {e}")));
        let intervals = s
            .split(',')
            .map(|piece| {
                let (lo, hi) = piece
                    .split_once(':')
                    .ok_or_else(|| Error::Parse(format!("interval `{piece}` is not lo:hi")))?;
                Ok((parse(lo)?, parse(hi)?))
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(intervals)
    }
}

impl Serialize for IntervalUnion {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        self.intervals.serialize(s)
    }
}

/// `⟨x⟩_H`: `x` if `x ∈ H`, else 0.
#[inline]
pub fn truncate(x: f64, h: &IntervalUnion) -> f64 {
    if h.contains(x) {
        x
    } else {
        0.0
    }
}

/// `⟨x⟩_H̄`: `x` if `x ∉ H`, else 0.
#[inline]
pub fn truncate_complement(x: f64, h: &IntervalUnion) -> f64 {
    if h.contains(x) {
        0.0
    } else {
        x
    }
}

pub fn truncate_matrix(m: &DMatrix<f64>, h: &IntervalUnion) -> DMatrix<f64> {
    m.map(|x| truncate(x, h))
}

pub fn truncate_matrix_complement(m: &DMatrix<f64>, h: &IntervalUnion) -> DMatrix<f64> {
    m.map(|x| truncate_complement(x, h))
}

/// `A + B = Γ + Ξ` with `Γ = ⟨A − λ𝟙⟩_H`.
#[derive(Debug, Clone)]
pub struct MatrixSplit {
    pub lambda: f64,
    pub h: IntervalUnion,
    /// `Γ`.
    pub regular: DMatrix<f64>,
    /// `Ξ`, stored so that `regular + irregular == total` entrywise.
    pub irregular: DMatrix<f64>,
    /// `A + B`.
    pub total: DMatrix<f64>,
    /// Entries where no f64 `e` satisfies `regular + e == total` (left as `total − regular`).
    pub inexact_entries: usize,
}

impl MatrixSplit {
    pub fn rows(&self) -> usize {
        self.total.nrows()
    }

    pub fn cols(&self) -> usize {
        self.total.ncols()
    }
}

/// Returns `e` with `regular + e == total` in f64, starting from `total − regular`
/// and moving a few ulps if rounding breaks the identity.
fn exact_difference(total: f64, regular: f64) -> (f64, bool) {
    let e = total - regular;
    if e + regular == total {
        return (e, true);
    }
    let (mut up, mut down) = (e, e);
    for _ in 0..8 {
        up = up.next_up();
        if up + regular == total {
            return (up, true);
        }
        down = down.next_down();
        if down + regular == total {
            return (down, true);
        }
    }
    (e, false)
}

/// Splits `A + B` into the H-regular part `⟨A − λ𝟙⟩_H` and the rest.
pub fn split_matrix(a: &DMatrix<f64>, b: &DMatrix<f64>, lambda: f64, h: &IntervalUnion) -> Result<MatrixSplit> {
    if a.shape() != b.shape() {
        return Err(Error::Argument(format!("shape mismatch: A is {:?}, B is {:?}", a.shape(), b.shape())));
    }
    let total = a + b;
    let regular = a.map(|x| truncate(x - lambda, h));
    let mut inexact_entries = 0;
    let irregular = DMatrix::from_fn(a.nrows(), a.ncols(), |i, j| {
        let (e, exact) = exact_difference(total[(i, j)], regular[(i, j)]);
        if !exact {
            inexact_entries += 1;
        }
        e
    });
    Ok(MatrixSplit { lambda, h: h.clone(), regular, irregular, total, inexact_entries })
}

/// Generators of `(M+M')(E^⊥) + (⟨M⟩_H̄ + M')(E)` for `E = span{e_j : j ∈ J}`
/// (`J` zero-based): column `j` is `col_j(M+M')` for `j ∉ J` and
/// `col_j(⟨M⟩_H̄ + M')` for `j ∈ J`.
pub fn build_subspace_basis(m: &DMatrix<f64>, mp: &DMatrix<f64>, h: &IntervalUnion, j_set: &[usize]) -> Result<DMatrix<f64>> {
    if m.shape() != mp.shape() {
        return Err(Error::Argument(format!("shape mismatch: M is {:?}, M' is {:?}", m.shape(), mp.shape())));
    }
    let n = m.ncols();
    let mut in_e = vec![false; n];
    for &j in j_set {
        if j >= n {
            return Err(Error::Argument(format!("index {j} out of range for {n} columns")));
        }
        in_e[j] = true;
    }
    Ok(DMatrix::from_fn(m.nrows(), n, |i, j| {
        if in_e[j] {
            truncate_complement(m[(i, j)], h) + mp[(i, j)]
        } else {
            m[(i, j)] + mp[(i, j)]
        }
    }))
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::dmatrix;

    fn h(s: &str) -> IntervalUnion {
        s.parse().unwrap()
    }

    #[test]
    fn scalar_truncation() {
        let hs = h("1:2,4:6");
        assert_eq!(truncate(5.0, &hs), 5.0);
        assert_eq!(truncate(3.0, &hs), 0.0);
        assert_eq!(truncate(4.0, &hs), 4.0);
        let neg = h("-8:-6");
        assert_eq!(truncate(-7.0, &neg), -7.0);
        assert_eq!(truncate_complement(-7.0, &neg), 0.0);
        assert_eq!(truncate(-7.0, &neg) + truncate_complement(-7.0, &neg), -7.0);
    }

    #[test]
    fn interval_union_validation() {
        assert!(IntervalUnion::new(vec![(2.0, 1.0)]).is_err());
        assert!(IntervalUnion::new(vec![(0.0, 2.0), (2.0, 3.0)]).is_err());
        assert!(IntervalUnion::new(vec![(3.0, 4.0), (0.0, 1.0)]).is_err());
        assert!("1:2,x:3".parse::<IntervalUnion>().is_err());
        assert_eq!(h("-2:-1,1:2").to_string(), "-2:-1,1:2");
        assert_eq!(h("-3:-2,1:3").sup_abs(), 3.0);
        assert_eq!(h("-3:-2").distance_to(&h("1:3")), 3.0);
        let u = h("1:3").union(&h("-3:-2")).unwrap();
        assert_eq!(u, h("-3:-2,1:3"));
    }

    #[test]
    fn split_examples() {
        let a = dmatrix![2.0, 5.0; 0.0, -3.0];
        let z = DMatrix::zeros(2, 2);
        let s = split_matrix(&a, &z, 0.0, &h("4:6")).unwrap();
        assert_eq!(s.regular, dmatrix![0.0, 5.0; 0.0, 0.0]);
        assert_eq!(s.irregular, dmatrix![2.0, 0.0; 0.0, -3.0]);

        let b = dmatrix![1.0, 1.0; 1.0, 1.0];
        let s = split_matrix(&a, &b, 1.0, &h("3:5")).unwrap();
        assert_eq!(s.regular, dmatrix![0.0, 4.0; 0.0, 0.0]);
        assert_eq!(s.irregular, dmatrix![3.0, 2.0; 1.0, -2.0]);
        assert_eq!(&s.regular + &s.irregular, &a + &b);

        let all = split_matrix(&a, &b, 0.0, &h("-1e9:1e9")).unwrap();
        assert_eq!(all.regular, a);
        assert_eq!(all.irregular, b);
    }

    #[test]
    fn split_shape_mismatch() {
        let a = DMatrix::<f64>::zeros(2, 2);
        let b = DMatrix::<f64>::zeros(3, 2);
        assert!(split_matrix(&a, &b, 0.0, &h("0:1")).is_err());
    }

    #[test]
    fn exact_difference_repairs_rounding() {
        // 0.1 + 0.2 style cancellation
        let (e, ok) = exact_difference(0.3, 0.1);
        assert!(ok);
        assert_eq!(e + 0.1, 0.3);
        // impossible: 1e-20 cannot be reached from -1 + e
        let (_, ok) = exact_difference(1e-20, 1.0);
        assert!(!ok);
    }

    #[test]
    fn subspace_generators() {
        let m = dmatrix![2.0, 5.0; 0.0, -3.0; 1.0, 1.0];
        let z = DMatrix::zeros(3, 2);
        let g = build_subspace_basis(&m, &z, &h("4:6"), &[1]).unwrap();
        assert_eq!(g, dmatrix![2.0, 0.0; 0.0, -3.0; 1.0, 1.0]);
        let mp = dmatrix![1.0, 1.0; 1.0, 1.0; 1.0, 1.0];
        assert_eq!(build_subspace_basis(&m, &mp, &h("4:6"), &[]).unwrap(), &m + &mp);
        let inside = dmatrix![4.5, 5.0; 5.5, 6.0];
        let g = build_subspace_basis(&inside, &DMatrix::zeros(2, 2), &h("4:6"), &[0, 1]).unwrap();
        assert_eq!(g, DMatrix::zeros(2, 2));
        assert!(build_subspace_basis(&m, &z, &h("4:6"), &[2]).is_err());
    }
}
