//! Deterministic kernel: distances to subspaces, extremal singular values and
//! the ε-net lower bound `inf_{y∈S} ‖Dy‖ ≥ h − ε‖Γ‖`.

use std::collections::HashMap;

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::hpart::MatrixSplit;
use crate::sphere::Net;

/// A generator column is dropped when its residual is at most this fraction of its norm.
pub const RANK_TOLERANCE: f64 = 1e-10;

/// Orthonormal basis of the column span, by modified Gram–Schmidt with one
/// reorthogonalization pass.
pub fn orthonormal_basis(generators: &DMatrix<f64>) -> Vec<DVector<f64>> {
    let mut basis: Vec<DVector<f64>> = Vec::new();
    for col in generators.column_iter() {
        let norm0 = col.norm();
        if norm0 == 0.0 || !norm0.is_finite() {
            continue;
        }
        let mut v = col.into_owned();
        for _ in 0..2 {
            for q in &basis {
                let c = q.dot(&v);
                v.axpy(-c, q, 1.0);
            }
        }
        let r = v.norm();
        if r > RANK_TOLERANCE * norm0 {
            basis.push(v / r);
        }
    }
    basis
}

/// `‖v − P v‖` for the orthogonal projection `P` onto `span(basis)`.
pub fn residual_norm(v: &DVector<f64>, basis: &[DVector<f64>]) -> f64 {
    let mut r = v.clone();
    for _ in 0..2 {
        for q in basis {
            let c = q.dot(&r);
            r.axpy(-c, q, 1.0);
        }
    }
    r.norm()
}

/// Euclidean distance from `v` to the column span of `generators`.
pub fn distance_to_subspace(v: &DVector<f64>, generators: &DMatrix<f64>) -> Result<f64> {
    if generators.nrows() != v.len() {
        return Err(Error::Argument(format!(
            "generators have {} rows, vector has {} entries",
            generators.nrows(),
            v.len()
        )));
    }
    Ok(residual_norm(v, &orthonormal_basis(generators)))
}

fn check_finite(m: &DMatrix<f64>) -> Result<()> {
    if m.iter().all(|x| x.is_finite()) {
        Ok(())
    } else {
        Err(Error::Argument("matrix has non-finite entries".into()))
    }
}

/// `(s_max, s_min)` of an `N×n` matrix, `N ≥ n ≥ 1`.
pub fn singular_extremes(m: &DMatrix<f64>) -> Result<(f64, f64)> {
    let (rows, cols) = m.shape();
    if !(rows >= cols && cols >= 1) {
        return Err(Error::Argument(format!("need N >= n >= 1, got {rows}x{cols}")));
    }
    check_finite(m)?;
    let sv = m.singular_values();
    let max = sv.iter().copied().fold(0.0, f64::max);
    let min = sv.iter().copied().fold(f64::INFINITY, f64::min);
    Ok((max, min.max(0.0)))
}

/// Spectral norm (largest singular value) of any shape.
pub fn operator_norm(m: &DMatrix<f64>) -> Result<f64> {
    if m.is_empty() {
        return Ok(0.0);
    }
    check_finite(m)?;
    Ok(m.singular_values().iter().copied().fold(0.0, f64::max))
}

/// `dist(col_j(M), span{col_k(M)}_{k≠j})` for every `j`.
pub fn leave_one_out_distances(m: &DMatrix<f64>) -> Result<Vec<f64>> {
    check_finite(m)?;
    let n = m.ncols();
    (0..n)
        .map(|j| {
            let others = m.clone().remove_column(j);
            distance_to_subspace(&m.column(j).into_owned(), &others)
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PointDistance {
    pub id: usize,
    pub distance: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct Certificate {
    pub h: f64,
    pub epsilon: f64,
    pub regular_norm: f64,
    /// `h − ε·‖Γ‖`; may be non-positive.
    pub lower_bound: f64,
    pub vacuous: bool,
    pub per_point: Vec<PointDistance>,
    pub target_set: String,
}

/// Subspace `E_{y'}` attached to each net point.
#[derive(Debug, Clone, Copy)]
pub enum SubspaceChoice<'a> {
    /// `E_{y'} = span{e_j}_{j ∈ supp y'}`.
    Support,
    /// Caller-supplied coordinate sets, one per net point (must contain `supp y'`).
    Custom(&'a [Vec<usize>]),
    /// `E_{y'} = ℝ^n`.
    FullSpace,
}

/// Evaluates `dist(Γy', D(E^⊥) + Ξ(E))` at every net point and returns
/// `h − ε‖Γ‖` with `h` the minimum distance. Covering of the target set is the
/// caller's responsibility and is only recorded in `target_set`.
pub fn certify_general(split: &MatrixSplit, net: &Net, subspaces: SubspaceChoice<'_>, epsilon: f64, target_set: &str) -> Result<Certificate> {
    let (rows, n) = (split.rows(), split.cols());
    if net.n != n {
        return Err(Error::Argument(format!("net lives in R^{}, matrix has {n} columns", net.n)));
    }
    if net.is_empty() {
        return Err(Error::Argument("empty net".into()));
    }
    if !(epsilon > 0.0) {
        return Err(Error::Argument(format!("epsilon must be positive, got {epsilon}")));
    }
    if let SubspaceChoice::Custom(sets) = subspaces {
        if sets.len() != net.len() {
            return Err(Error::Argument(format!("{} subspaces for {} net points", sets.len(), net.len())));
        }
    }
    check_finite(&split.total)?;
    check_finite(&split.irregular)?;

    let all: Vec<usize> = (0..n).collect();
    let mut jobs: Vec<(usize, Vec<usize>)> = Vec::with_capacity(net.len());
    for (id, p) in net.points.iter().enumerate() {
        let j_set: Vec<usize> = match subspaces {
            SubspaceChoice::Support => p.support.clone(),
            SubspaceChoice::FullSpace => all.clone(),
            SubspaceChoice::Custom(sets) => {
                let mut s = sets[id].clone();
                s.sort_unstable();
                s.dedup();
                if let Some(&bad) = s.iter().find(|&&j| j >= n) {
                    return Err(Error::Argument(format!("net point {id}: index {bad} out of range")));
                }
                if let Some(&miss) = p.support.iter().find(|j| s.binary_search(j).is_err()) {
                    return Err(Error::Precondition(format!("net point {id}: supp y' contains {miss}, outside E")));
                }
                s
            }
        };
        jobs.push((id, j_set));
    }

    // one orthonormal basis per distinct coordinate set
    let mut bases: HashMap<Vec<usize>, Vec<DVector<f64>>> = HashMap::new();
    for (_, j_set) in &jobs {
        if !bases.contains_key(j_set) {
            let mut in_e = vec![false; n];
            for &j in j_set {
                in_e[j] = true;
            }
            let gens = DMatrix::from_fn(rows, n, |i, j| if in_e[j] { split.irregular[(i, j)] } else { split.total[(i, j)] });
            bases.insert(j_set.clone(), orthonormal_basis(&gens));
        }
    }

    let eval = |(id, j_set): &(usize, Vec<usize>)| {
        let y = DVector::from_vec(net.points[*id].dense(n));
        let gy = &split.regular * y;
        PointDistance { id: *id, distance: residual_norm(&gy, &bases[j_set]) }
    };
    #[cfg(feature = "parallel")]
    let per_point: Vec<PointDistance> = {
        use rayon::prelude::*;
        jobs.par_iter().map(eval).collect()
    };
    #[cfg(not(feature = "parallel"))]
    let per_point: Vec<PointDistance> = jobs.iter().map(eval).collect();

    let h = per_point.iter().map(|p| p.distance).fold(f64::INFINITY, f64::min);
    let regular_norm = operator_norm(&split.regular)?;
    let lower_bound = h - epsilon * regular_norm;
    Ok(Certificate {
        h,
        epsilon,
        regular_norm,
        lower_bound,
        vacuous: lower_bound <= 0.0,
        per_point,
        target_set: target_set.to_string(),
    })
}
