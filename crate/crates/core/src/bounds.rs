//! Anti-concentration inequalities and the thresholds derived from them.
//!
//! The universal constants of the underlying theorems are unknown; they live
//! in [`ConstantsConfig`] so experiments can calibrate them.

use std::path::Path;

use serde::Serialize;

use crate::error::{Error, Result};

/// Universal constants used by the bounds and by the proof pipeline.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ConstantsConfig {
    /// Small-ball projection constant.
    pub c_rv: f64,
    /// Rogozin constant.
    pub c_rogozin: f64,
    /// Net sparsification constant.
    pub c_net: f64,
    /// Norm bound for bounded mean-zero matrices.
    pub c_normbound: f64,
    /// Interval detection constant, `(Σ_{m≥0} 2^{-m/8})^{-1}` by default.
    pub c_detect: f64,
    /// Distance multiplier of the wrap-signum lemma.
    pub h_wrap: f64,
    /// Exponential rate of the wrap-signum lemma.
    pub w_wrap: f64,
}

impl Default for ConstantsConfig {
    fn default() -> Self {
        Self {
            c_rv: 1.0,
            c_rogozin: 1.0,
            c_net: 6.0 * std::f64::consts::E,
            c_normbound: 2.0,
            c_detect: detect_constant(),
            h_wrap: 1.0,
            w_wrap: 1.0,
        }
    }
}

/// `1 − 2^{-1/8}`, the reciprocal of `Σ_{m≥0} 2^{-m/8}`.
pub fn detect_constant() -> f64 {
    1.0 - 2f64.powf(-0.125)
}

impl ConstantsConfig {
    pub fn validate(&self) -> Result<()> {
        let fields = [
            ("c_rv", self.c_rv),
            ("c_rogozin", self.c_rogozin),
            ("c_net", self.c_net),
            ("c_normbound", self.c_normbound),
            ("c_detect", self.c_detect),
            ("h_wrap", self.h_wrap),
            ("w_wrap", self.w_wrap),
        ];
        for (name, v) in fields {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::Config(format!("{name} must be a positive real, got {v}")));
            }
        }
        if self.c_detect > 1.0 {
            return Err(Error::Config(format!("c_detect must be <= 1, got {}", self.c_detect)));
        }
        Ok(())
    }

    /// Parses flat `key = value` lines. `#` starts a comment; unknown keys are errors.
    pub fn parse(text: &str) -> Result<Self> {
        let mut cfg = Self::default();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| Error::Parse(format!("line {}: expected key=value", lineno + 1)))?;
            let value: f64 = value
                .trim()
                .parse()
                .map_err(|e| Error::Parse(format!("line {}: {e}", lineno + 1)))?;
            let slot = match key.trim() {
                "c_rv" => &mut cfg.c_rv,
                "c_rogozin" => &mut cfg.c_rogozin,
                "c_net" => &mut cfg.c_net,
                "c_normbound" => &mut cfg.c_normbound,
                "c_detect" => &mut cfg.c_detect,
                "h_wrap" => &mut cfg.h_wrap,
                "w_wrap" => &mut cfg.w_wrap,
                other => return Err(Error::Parse(format!("line {}: unknown key `{other}`", lineno + 1))),
            };
            *slot = value;
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::parse(&std::fs::read_to_string(path)?)
    }
}

/// A probability bound evaluated at a small-ball radius.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BoundValue {
    /// `raw` clamped to `[0, 1]`.
    pub value: f64,
    pub radius: f64,
    pub raw: f64,
}

impl BoundValue {
    fn new(raw: f64, radius: f64) -> Self {
        Self { value: raw.clamp(0.0, 1.0), radius, raw }
    }
}

/// Rogozin: `Q(Σ ξ_j, h) ≤ C·h·(Σ (1 − q_j) h_j²)^{-1/2}` for `h ≥ max h_j`,
/// where `terms` holds `(h_j, q_j = Q(ξ_j, h_j))`.
pub fn rogozin_bound(h: f64, terms: &[(f64, f64)], cfg: &ConstantsConfig) -> Result<BoundValue> {
    if terms.is_empty() {
        return Err(Error::Argument("rogozin bound needs at least one term".into()));
    }
    if !(h > 0.0 && h.is_finite()) {
        return Err(Error::Argument(format!("h must be positive, got {h}")));
    }
    let mut max_h = 0.0f64;
    let mut denom = 0.0;
    for &(hj, qj) in terms {
        if !(hj > 0.0 && hj.is_finite()) || !(0.0..=1.0).contains(&qj) {
            return Err(Error::Argument(format!("invalid term (h_j={hj}, q_j={qj})")));
        }
        max_h = max_h.max(hj);
        denom += (1.0 - qj) * hj * hj;
    }
    if h < max_h {
        return Err(Error::Precondition(format!("h = {h} is below max h_j = {max_h}")));
    }
    if denom <= 0.0 {
        return Err(Error::Degenerate("every term has q_j = 1".into()));
    }
    Ok(BoundValue::new(cfg.c_rogozin * h / denom.sqrt(), h))
}

/// Small-ball probability of a `d`-dimensional projection: `(C·η)^d` at
/// radius `h·√d`. The reported radius is the multiplier `√d`.
pub fn rv_projection_bound(eta: f64, d: usize, cfg: &ConstantsConfig) -> Result<BoundValue> {
    if !(eta > 0.0 && eta < 1.0) {
        return Err(Error::Argument(format!("eta must lie in (0,1), got {eta}")));
    }
    if d == 0 {
        return Err(Error::Argument("d must be >= 1".into()));
    }
    Ok(BoundValue::new((cfg.c_rv * eta).powi(d as i32), (d as f64).sqrt()))
}

/// Extension to concentrated coordinates (`Q(X_i, h) ≤ 1 − τ`) through sums of
/// `ℓ` independent copies: `(C_RV·C_Rog/√(ℓτ))^{d/ℓ}` at radius `h√d/ℓ`.
pub fn rv_extension_bound(h: f64, tau: f64, d: usize, ell: usize, cfg: &ConstantsConfig) -> Result<BoundValue> {
    if !(h > 0.0) {
        return Err(Error::Argument(format!("h must be positive, got {h}")));
    }
    if !(tau > 0.0 && tau <= 1.0) {
        return Err(Error::Argument(format!("tau must lie in (0,1], got {tau}")));
    }
    if d == 0 || ell == 0 {
        return Err(Error::Argument("d and ell must be >= 1".into()));
    }
    let base = extension_base(tau, ell, cfg);
    let raw = base.powf(d as f64 / ell as f64);
    Ok(BoundValue::new(raw, h * (d as f64).sqrt() / ell as f64))
}

/// `C_RV·C_Rog/√(ℓτ)`.
pub fn extension_base(tau: f64, ell: usize, cfg: &ConstantsConfig) -> f64 {
    cfg.c_rv * cfg.c_rogozin / (ell as f64 * tau).sqrt()
}

/// `ℓ = ⌈4·C_RV²·C_Rog²/τ⌉`, which puts the extension base at or below `1/2`.
pub fn choose_ell(tau: f64, cfg: &ConstantsConfig) -> usize {
    (4.0 * cfg.c_rv.powi(2) * cfg.c_rogozin.powi(2) / tau).ceil().max(1.0) as usize
}

/// Distance threshold `((1 − δ^{-1/4})/C_Rog)·√(r/8)·t·d` for two intervals of
/// mass at least `r` each, gap `d`, and vectors of norm at least `t`.
pub fn distance_threshold(delta: f64, r: f64, t: f64, d: f64, cfg: &ConstantsConfig) -> Result<f64> {
    if !(delta > 1.0) {
        return Err(Error::Argument(format!("delta must exceed 1, got {delta}")));
    }
    Ok((1.0 - delta.powf(-0.25)) / cfg.c_rogozin * (r / 8.0).sqrt() * t * d)
}

/// Peakiness level `θ = ((1 − δ^{-1/4})/C_Rog)·√(γ/8)` separating peaky vectors
/// from the almost-sparse regime.
pub fn peaky_threshold(gamma: f64, delta: f64, cfg: &ConstantsConfig) -> Result<f64> {
    distance_threshold(delta, gamma, 1.0, 1.0, cfg)
}
