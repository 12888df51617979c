//! Seeded experiments on the individual probabilistic ingredients: peaky
//! columns, distances of truncated images to a subspace, and norms of bounded
//! mean-zero matrices.

use std::collections::BTreeMap;

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use crate::bounds::{distance_threshold, ConstantsConfig};
use crate::certify::{distance_to_subspace, leave_one_out_distances, operator_norm};
use crate::detect::detect_on_law;
use crate::dist::{sample_matrix, select_shift_and_case, CaseId, EntryDistribution};
use crate::error::{Error, Result};
use crate::hpart::{build_subspace_basis, truncate_matrix};
use crate::rng::derive_seed;
use crate::sphere::{norm2, norm_inf};

use super::trials::{TailEstimate, MAX_ROWS};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ComponentMode {
    /// `min_j dist(col_j A, span of the other columns) / √(N−n+1)`.
    Peaky,
    /// `dist(⟨A/α − λ𝟙⟩_H y, 𝔼) / √N` for a fixed `y`, `H` and `λ` from detection.
    Distance,
    /// `‖W‖ / (R√N)` for a matrix with mean-zero entries bounded by `R`.
    Norm,
}

impl std::str::FromStr for ComponentMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "peaky" => Ok(Self::Peaky),
            "distance" => Ok(Self::Distance),
            "norm" => Ok(Self::Norm),
            other => Err(Error::Parse(format!("unknown mode `{other}` (expected peaky, distance or norm)"))),
        }
    }
}

#[derive(Debug, Clone)]
pub struct ComponentParams {
    pub dist: EntryDistribution,
    pub rows: usize,
    pub cols: usize,
    /// Thresholds for the normalized statistic, strictly increasing.
    pub thresholds: Vec<f64>,
    pub delta: f64,
    pub beta: f64,
    /// Fixed vector for the distance mode.
    pub y: Option<Vec<f64>>,
    /// Norm lower bound `t` assumed for `y` in the distance mode.
    pub t: f64,
    /// Entry bound in the norm mode.
    pub radius: f64,
    pub cfg: ConstantsConfig,
}

impl ComponentParams {
    pub fn new(dist: EntryDistribution, rows: usize, cols: usize, thresholds: Vec<f64>) -> Self {
        Self {
            dist,
            rows,
            cols,
            thresholds,
            delta: 2.0,
            beta: 0.5,
            y: None,
            t: 1.0,
            radius: 1.0,
            cfg: ConstantsConfig::default(),
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct ComponentSummary {
    pub mode: ComponentMode,
    pub trials: usize,
    pub tail_estimates: Vec<TailEstimate>,
    pub statistic_min: f64,
    pub statistic_max: f64,
    /// The threshold the corresponding estimate is stated for, when defined.
    pub reference_threshold: Option<f64>,
    pub params: BTreeMap<String, f64>,
}

/// Per-mode data computed once before the trials.
enum Prepared {
    Peaky,
    Distance { alpha: f64, lambda: f64, h: crate::hpart::IntervalUnion, y: DVector<f64>, support: Vec<usize> },
    Norm,
}

pub fn component_experiment(mode: ComponentMode, params: &ComponentParams, trials: usize, master_seed: u64) -> Result<ComponentSummary> {
    let (rows, cols) = (params.rows, params.cols);
    if trials == 0 {
        return Err(Error::Argument("trials must be positive".into()));
    }
    if cols == 0 || rows < cols {
        return Err(Error::Argument(format!("need N >= n >= 1, got {rows}x{cols}")));
    }
    if rows > MAX_ROWS {
        return Err(Error::Resource(format!("N = {rows} exceeds the desk-scale limit {MAX_ROWS}")));
    }
    if params.thresholds.is_empty() || params.thresholds.windows(2).any(|w| !(w[0] < w[1])) || params.thresholds[0] <= 0.0 {
        return Err(Error::Argument("thresholds must be positive and strictly increasing".into()));
    }
    params.dist.validate()?;
    params.cfg.validate()?;

    let mut info = BTreeMap::new();
    let reference;
    let prepared = match mode {
        ComponentMode::Peaky => {
            reference = Some(0.5);
            Prepared::Peaky
        }
        ComponentMode::Norm => {
            if !(params.radius > 0.0) {
                return Err(Error::Argument(format!("radius must be positive, got {}", params.radius)));
            }
            reference = Some(params.cfg.c_normbound);
            info.insert("R".into(), params.radius);
            Prepared::Norm
        }
        ComponentMode::Distance => {
            let y = params.y.as_ref().ok_or_else(|| Error::Argument("distance mode needs a vector y".into()))?;
            if y.len() != cols {
                return Err(Error::Argument(format!("y has {} entries, expected {cols}", y.len())));
            }
            if !(params.delta > 1.0) || (rows as f64) < params.delta * cols as f64 {
                return Err(Error::Argument(format!("need N >= delta*n with delta > 1, got {rows}x{cols}, delta={}", params.delta)));
            }
            let scaled = params
                .dist
                .calibrate_scale(params.beta)
                .ok_or_else(|| Error::Precondition(format!("no scale reaches Q(a/alpha,1) <= 1 - beta = {}", 1.0 - params.beta)))?;
            let case = select_shift_and_case(&scaled, params.beta, rows)?;
            if case.case_id != CaseId::TwoSided {
                return Err(Error::Precondition(format!("distance mode needs the two-sided case, got {:?}", case.case_id)));
            }
            let det = detect_on_law(&scaled.normalized_law(), case.z, case.gamma, rows, &params.cfg)?;
            let h = distance_threshold(params.delta, det.mass_floor(case.gamma), params.t, det.gap(), &params.cfg)?;
            let (ny, cap) = (norm2(y), 2.0 * h / det.gap());
            if ny < params.t - 1e-12 || norm_inf(y) > cap {
                return Err(Error::Precondition(format!(
                    "y must satisfy ||y|| >= t = {} and ||y||_inf <= 2h/d = {cap}; got {ny} and {}",
                    params.t,
                    norm_inf(y)
                )));
            }
            reference = Some(params.cfg.h_wrap * h);
            info.insert("alpha".into(), scaled.scale);
            info.insert("lambda".into(), det.lambda);
            info.insert("ell".into(), det.ell as f64);
            info.insert("h".into(), h);
            Prepared::Distance {
                alpha: scaled.scale,
                lambda: det.lambda,
                h: det.h(),
                y: DVector::from_column_slice(y),
                support: (0..cols).filter(|&j| y[j] != 0.0).collect(),
            }
        }
    };

    let one = |t: usize| -> Result<f64> {
        let a = sample_matrix(&params.dist, rows, cols, derive_seed(master_seed, t as u64))?;
        match &prepared {
            Prepared::Peaky => {
                let d = leave_one_out_distances(&a)?;
                Ok(d.into_iter().fold(f64::INFINITY, f64::min) / ((rows - cols + 1) as f64).sqrt())
            }
            Prepared::Norm => {
                if let Some(x) = a.iter().find(|x| x.abs() > params.radius) {
                    return Err(Error::Precondition(format!("entry {x} exceeds the bound R = {}", params.radius)));
                }
                Ok(operator_norm(&a)? / (params.radius * (rows as f64).sqrt()))
            }
            Prepared::Distance { alpha, lambda, h, y, support } => {
                let m = a.map(|x| x / alpha - lambda);
                let mp = DMatrix::from_element(rows, cols, *lambda);
                let regular = truncate_matrix(&m, h);
                let generators = build_subspace_basis(&m, &mp, h, support)?;
                Ok(distance_to_subspace(&(&regular * y), &generators)? / (rows as f64).sqrt())
            }
        }
    };

    #[cfg(feature = "parallel")]
    let stats: Vec<f64> = {
        use rayon::prelude::*;
        (0..trials).into_par_iter().map(one).collect::<Result<_>>()?
    };
    #[cfg(not(feature = "parallel"))]
    let stats: Vec<f64> = (0..trials).map(one).collect::<Result<_>>()?;

    let tail_estimates = params
        .thresholds
        .iter()
        .map(|&u| {
            let count = stats.iter().filter(|&&s| s <= u).count();
            TailEstimate { u, count, probability: (count + 1) as f64 / (trials + 1) as f64 }
        })
        .collect();
    Ok(ComponentSummary {
        mode,
        trials,
        tail_estimates,
        statistic_min: stats.iter().copied().fold(f64::INFINITY, f64::min),
        statistic_max: stats.iter().copied().fold(f64::NEG_INFINITY, f64::max),
        reference_threshold: reference,
        params: info,
    })
}
