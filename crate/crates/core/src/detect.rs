//! Dyadic interval detection: levels `ℓ₁, ℓ₂`, a centring `λ` and intervals
//! `H₁, H₂` on which the truncated, recentred entry has mean zero.

use serde::Serialize;

use crate::bounds::ConstantsConfig;
use crate::dist::{EntryDistribution, Law};
use crate::error::{Error, Result};
use crate::hpart::IntervalUnion;

/// Slack for the mass precondition, absorbing cdf rounding.
const MASS_SLACK: f64 = 1e-12;

#[derive(Debug, Clone, Serialize)]
pub struct DetectionResult {
    pub ell1: u32,
    pub ell2: u32,
    pub ell: u32,
    pub lambda: f64,
    pub h1: IntervalUnion,
    pub h2: IntervalUnion,
    pub mass1: f64,
    pub mass2: f64,
    pub c_detect: f64,
}

impl DetectionResult {
    /// `H = H₁ ∪ H₂`.
    pub fn h(&self) -> IntervalUnion {
        self.h1.union(&self.h2).expect("detected intervals are disjoint")
    }

    /// `2^ℓ`, the guaranteed gap.
    pub fn gap(&self) -> f64 {
        2f64.powi(self.ell as i32)
    }

    /// `2^{ℓ+2}`, the bounding box half-width.
    pub fn box_radius(&self) -> f64 {
        2f64.powi(self.ell as i32 + 2)
    }

    /// `c·γ·2^{-ℓ/8}`, the guaranteed mass per interval.
    pub fn mass_floor(&self, gamma: f64) -> f64 {
        mass_threshold(self.c_detect, gamma, self.ell)
    }
}

pub fn mass_threshold(c_detect: f64, gamma: f64, level: u32) -> f64 {
    c_detect * gamma * 2f64.powf(-(level as f64) / 8.0)
}

/// Largest `L` with `2^L ≤ √N`, i.e. `4^L ≤ N`.
pub fn max_level(n_rows: usize) -> u32 {
    let mut l = 0u32;
    while 4u128.pow(l + 1) <= n_rows as u128 {
        l += 1;
    }
    l
}

/// Masses of `[−2^{ℓ+1}, −2^ℓ]` (left) and `[2^ℓ, 2^{ℓ+1}]` (right) around `z`
/// for every admissible level.
pub fn level_masses(law: &Law<'_>, z: f64, n_rows: usize) -> (Vec<f64>, Vec<f64>) {
    (0..=max_level(n_rows))
        .map(|l| {
            let (a, b) = (2f64.powi(l as i32), 2f64.powi(l as i32 + 1));
            (law.prob_closed(z - b, z - a), law.prob_closed(z + a, z + b))
        })
        .unzip()
}

/// Detection on the normalized law `a/α` of `dist`.
pub fn find_dyadic_intervals(
    dist: &EntryDistribution,
    z: f64,
    gamma: f64,
    n_rows: usize,
    cfg: &ConstantsConfig,
) -> Result<DetectionResult> {
    dist.validate()?;
    detect_on_law(&dist.normalized_law(), z, gamma, n_rows, cfg)
}

/// Detection for an arbitrary law (`ξ` itself, no normalization).
pub fn detect_on_law(law: &Law<'_>, z: f64, gamma: f64, n_rows: usize, cfg: &ConstantsConfig) -> Result<DetectionResult> {
    if !(gamma > 0.0 && gamma < 1.0) {
        return Err(Error::Argument(format!("gamma must lie in (0,1), got {gamma}")));
    }
    if n_rows == 0 || !z.is_finite() {
        return Err(Error::Argument("N must be positive and z finite".into()));
    }
    cfg.validate()?;
    let root = (n_rows as f64).sqrt();
    let left = law.prob_closed(z - root, z - 1.0);
    let right = law.prob_closed(z + 1.0, z + root);
    if left.min(right) < gamma - MASS_SLACK {
        return Err(Error::Precondition(format!(
            "mass condition fails: P{{z-sqrt(N) <= xi <= z-1}} = {left}, P{{z+1 <= xi <= z+sqrt(N)}} = {right}, gamma = {gamma}"
        )));
    }

    let (lm, rm) = level_masses(law, z, n_rows);
    let pick = |masses: &[f64]| {
        masses
            .iter()
            .enumerate()
            .position(|(l, &m)| m >= mass_threshold(cfg.c_detect, gamma, l as u32))
    };
    let (Some(l1), Some(l2)) = (pick(&lm), pick(&rm)) else {
        return Err(Error::Detection {
            message: format!("no dyadic level reaches c*gamma*2^(-l/8) with gamma = {gamma}"),
            left_masses: lm,
            right_masses: rm,
        });
    };

    let (a1, b1) = (z - 2f64.powi(l1 as i32 + 1), z - 2f64.powi(l1 as i32));
    let (a2, b2) = (z + 2f64.powi(l2 as i32), z + 2f64.powi(l2 as i32 + 1));
    let (p1, p2) = (lm[l1], rm[l2]);
    let lambda = (law.partial_mean(a1, b1) + law.partial_mean(a2, b2)) / (p1 + p2);

    let h1 = IntervalUnion::single(a1 - lambda, b1 - lambda)?;
    let h2 = IntervalUnion::single(a2 - lambda, b2 - lambda)?;
    let ell = l1.max(l2) as u32;
    Ok(DetectionResult {
        ell1: l1 as u32,
        ell2: l2 as u32,
        ell,
        lambda,
        h1,
        h2,
        mass1: p1,
        mass2: p2,
        c_detect: cfg.c_detect,
    })
}
