//! Seeded Monte Carlo over `s_n(A + B)` and exponential tail fits.

use std::path::PathBuf;

use nalgebra::DMatrix;
use serde::Serialize;

use crate::certify::singular_extremes;
use crate::dist::{sample_base_matrix, EntryDistribution};
use crate::error::{Error, Result};
use crate::io::read_matrix;
use crate::rng::derive_seed;

/// Largest row count for full-decomposition paths.
pub const MAX_ROWS: usize = 512;

#[derive(Debug, Clone, PartialEq)]
pub enum ShiftSource {
    Zero,
    /// `λ·𝟙`, the all-`λ` matrix.
    ScaledIdentity(f64),
    /// A fixed matrix read from a CSV file.
    File(PathBuf),
}

impl ShiftSource {
    /// `zero`, `identity:L` or `file:PATH`.
    pub fn parse(spec: &str) -> Result<Self> {
        let spec = spec.trim();
        if spec == "zero" {
            return Ok(Self::Zero);
        }
        if let Some(v) = spec.strip_prefix("identity:") {
            let l: f64 = v.trim().parse().map_err(|e| Error::Parse(format!("shift `{spec}`: {e}")))?;
            return Ok(Self::ScaledIdentity(l));
        }
        if let Some(p) = spec.strip_prefix("file:") {
            return Ok(Self::File(PathBuf::from(p)));
        }
        Err(Error::Parse(format!("unknown shift `{spec}` (expected zero, identity:L or file:PATH)")))
    }
}

#[derive(Debug, Clone)]
pub struct ExperimentConfig {
    pub dist: EntryDistribution,
    pub delta: f64,
    pub sizes: Vec<(usize, usize)>,
    pub trials: usize,
    pub master_seed: u64,
    pub shift_source: ShiftSource,
    pub u_grid: Vec<f64>,
    pub beta: f64,
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        self.dist.validate()?;
        if !(self.delta > 1.0) {
            return Err(Error::Config(format!("delta must exceed 1, got {}", self.delta)));
        }
        if !(self.beta > 0.0 && self.beta < 1.0) {
            return Err(Error::Config(format!("beta must lie in (0,1), got {}", self.beta)));
        }
        if self.trials == 0 || self.sizes.is_empty() {
            return Err(Error::Config("need at least one size and one trial".into()));
        }
        for &(rows, cols) in &self.sizes {
            if !(rows >= cols && cols >= 1) || (rows as f64) < self.delta * cols as f64 {
                return Err(Error::Config(format!("size {rows}x{cols} violates N >= max(n, delta*n), n >= 1")));
            }
            if rows > MAX_ROWS {
                return Err(Error::Resource(format!("N = {rows} exceeds the desk-scale limit {MAX_ROWS}")));
            }
        }
        if self.u_grid.iter().any(|u| !(*u > 0.0)) || self.u_grid.windows(2).any(|w| !(w[0] < w[1])) {
            return Err(Error::Config("u_grid must be positive and strictly increasing".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TrialRecord {
    pub trial_index: u64,
    pub seed: u64,
    #[serde(rename = "N")]
    pub n_rows: usize,
    #[serde(rename = "n")]
    pub n_cols: usize,
    pub s_min: f64,
    pub normalized: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TailEstimate {
    pub u: f64,
    pub count: usize,
    /// `(count + 1)/(trials + 1)`.
    pub probability: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Percentiles {
    pub p01: f64,
    pub p05: f64,
    pub p50: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DecayFit {
    pub u: f64,
    pub v_hat: f64,
    pub r_squared: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SizeSummary {
    #[serde(rename = "N")]
    pub n_rows: usize,
    #[serde(rename = "n")]
    pub n_cols: usize,
    pub trials: usize,
    pub tail_estimates: Vec<TailEstimate>,
    pub percentiles: Percentiles,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExperimentSummary {
    pub sizes: Vec<SizeSummary>,
    /// One fit per `u` when at least three distinct `N` were run.
    pub decay_fit: Vec<DecayFit>,
}

/// Nearest-rank percentile: the `⌈p·M⌉`-th order statistic of sorted data.
pub fn nearest_rank(sorted: &[f64], p: f64) -> f64 {
    let m = sorted.len();
    let k = ((p * m as f64).ceil() as usize).clamp(1, m);
    sorted[k - 1]
}

fn load_shift(src: &ShiftSource, rows: usize, cols: usize) -> Result<Option<DMatrix<f64>>> {
    match src {
        ShiftSource::File(path) => {
            let b = read_matrix(path)?;
            if b.shape() != (rows, cols) {
                return Err(Error::Config(format!(
                    "shift file {} is {}x{}, expected {rows}x{cols}",
                    path.display(),
                    b.nrows(),
                    b.ncols()
                )));
            }
            Ok(Some(b))
        }
        _ => Ok(None),
    }
}

/// `A + B` for one trial. The law's location and a scalar shift are folded
/// into a single offset so that `(dist + c, B − c𝟙)` reproduces `(dist, B)` bit for bit.
pub fn trial_matrix(config: &ExperimentConfig, rows: usize, cols: usize, seed: u64, file_shift: Option<&DMatrix<f64>>) -> Result<DMatrix<f64>> {
    let base = sample_base_matrix(&config.dist, rows, cols, seed)?;
    let lambda = match config.shift_source {
        ShiftSource::ScaledIdentity(l) => l,
        _ => 0.0,
    };
    let offset = config.dist.location + lambda;
    let mut total = base.map(|x| x + offset);
    if let Some(b) = file_shift {
        total += b;
    }
    Ok(total)
}

pub fn run_trials(config: &ExperimentConfig) -> Result<(Vec<TrialRecord>, ExperimentSummary)> {
    config.validate()?;
    let mut records = Vec::with_capacity(config.trials * config.sizes.len());
    for (k, &(rows, cols)) in config.sizes.iter().enumerate() {
        let shift = load_shift(&config.shift_source, rows, cols)?;
        let run = |t: usize| -> Result<TrialRecord> {
            let trial_index = (k * config.trials + t) as u64;
            let seed = derive_seed(config.master_seed, trial_index);
            let m = trial_matrix(config, rows, cols, seed, shift.as_ref())?;
            let (_, s_min) = singular_extremes(&m)?;
            Ok(TrialRecord { trial_index, seed, n_rows: rows, n_cols: cols, s_min, normalized: s_min / (rows as f64).sqrt() })
        };
        #[cfg(feature = "parallel")]
        let batch: Vec<Result<TrialRecord>> = {
            use rayon::prelude::*;
            (0..config.trials).into_par_iter().map(run).collect()
        };
        #[cfg(not(feature = "parallel"))]
        let batch: Vec<Result<TrialRecord>> = (0..config.trials).map(run).collect();
        for r in batch {
            records.push(r?);
        }
    }
    let summary = summarize(&records, &config.u_grid)?;
    Ok((records, summary))
}

/// Aggregates records per `(N, n)` in order of first appearance.
pub fn summarize(records: &[TrialRecord], u_grid: &[f64]) -> Result<ExperimentSummary> {
    let mut keys: Vec<(usize, usize)> = Vec::new();
    for r in records {
        if !keys.contains(&(r.n_rows, r.n_cols)) {
            keys.push((r.n_rows, r.n_cols));
        }
    }
    let mut sizes = Vec::new();
    for (rows, cols) in keys {
        let mut vals: Vec<f64> = records
            .iter()
            .filter(|r| (r.n_rows, r.n_cols) == (rows, cols))
            .map(|r| r.normalized)
            .collect();
        vals.sort_by(f64::total_cmp);
        let trials = vals.len();
        let tail_estimates = u_grid
            .iter()
            .map(|&u| {
                let count = vals.partition_point(|&v| v <= u);
                TailEstimate { u, count, probability: (count + 1) as f64 / (trials + 1) as f64 }
            })
            .collect();
        let percentiles = Percentiles { p01: nearest_rank(&vals, 0.01), p05: nearest_rank(&vals, 0.05), p50: nearest_rank(&vals, 0.5) };
        sizes.push(SizeSummary { n_rows: rows, n_cols: cols, trials, tail_estimates, percentiles });
    }
    let mut distinct: Vec<usize> = sizes.iter().map(|s| s.n_rows).collect();
    distinct.sort_unstable();
    distinct.dedup();
    let decay_fit = if distinct.len() >= 3 {
        u_grid.iter().map(|&u| fit_decay(&sizes, u)).collect::<Result<Vec<_>>>()?
    } else {
        Vec::new()
    };
    Ok(ExperimentSummary { sizes, decay_fit })
}

/// Slope of `−ln P` against `N` by least squares, with `r²`.
pub fn fit_decay_points(points: &[(f64, f64)]) -> Result<(f64, f64)> {
    let mut xs: Vec<f64> = points.iter().map(|p| p.0).collect();
    xs.sort_by(f64::total_cmp);
    xs.dedup();
    if xs.len() < 3 {
        return Err(Error::Argument(format!("decay fit needs at least 3 distinct N, got {}", xs.len())));
    }
    if points.iter().any(|&(_, p)| !(p > 0.0 && p <= 1.0)) {
        return Err(Error::Argument("tail probabilities must lie in (0,1]".into()));
    }
    let k = points.len() as f64;
    // measured from the first point so equal probabilities give an exactly zero slope
    let y0 = -points[0].1.ln();
    let ys: Vec<f64> = points.iter().map(|&(_, p)| -p.ln() - y0).collect();
    let mx = points.iter().map(|p| p.0).sum::<f64>() / k;
    let my = ys.iter().sum::<f64>() / k;
    let sxx: f64 = points.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = points.iter().zip(&ys).map(|(p, y)| (p.0 - mx) * (y - my)).sum();
    let slope = sxy / sxx;
    let ss_tot: f64 = ys.iter().map(|y| (y - my).powi(2)).sum();
    let ss_res: f64 = points.iter().zip(&ys).map(|(p, y)| (y - my - slope * (p.0 - mx)).powi(2)).sum();
    let r2 = if ss_tot == 0.0 { 1.0 } else { 1.0 - ss_res / ss_tot };
    Ok((slope, r2))
}

/// Decay fit at threshold `u` across the given per-size summaries.
pub fn fit_decay(summaries: &[SizeSummary], u: f64) -> Result<DecayFit> {
    let points = summaries
        .iter()
        .map(|s| {
            let est = s
                .tail_estimates
                .iter()
                .find(|e| e.u == u)
                .ok_or_else(|| Error::Argument(format!("u = {u} is not on the summary's grid")))?;
            Ok((s.n_rows as f64, est.probability))
        })
        .collect::<Result<Vec<_>>>()?;
    let (v_hat, r_squared) = fit_decay_points(&points)?;
    Ok(DecayFit { u, v_hat, r_squared })
}
