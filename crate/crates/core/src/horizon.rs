//! The random exit time.
//!
//! The investor leaves the market at `τ ∧ T`. The exit law is described by
//! a deterministic, piecewise-constant density `f` on `[0, T]` with
//! cumulative `F(t) = ∫₀ᵗ f`; whatever mass is left at `T`, `1 - F(T)`, is
//! the probability of surviving to the horizon and must be at least `ε`.

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub const DEFAULT_EPSILON: f64 = 0.05;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum HorizonError {
    #[error("horizon must be positive and finite, got {0}")]
    NonPositiveHorizon(f64),
    #[error("survival margin epsilon must lie in (0, 1), got {0}")]
    InvalidEpsilon(f64),
    #[error("density schedule must start at 0 and have increasing segment starts inside [0, T)")]
    ScheduleGap,
    #[error("density segment {segment} has negative or non-finite value {value}")]
    NegativeDensity { segment: usize, value: f64 },
    #[error("F(T) = {cdf_at_horizon} exceeds 1 - epsilon = {bound}")]
    SurvivalMarginViolated { cdf_at_horizon: f64, bound: f64 },
    #[error("time {t} outside [0, {horizon}]")]
    OutOfRangeTime { t: f64, horizon: f64 },
}

/// One segment of the exit density, in config form (`f` per year).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DensitySegment {
    pub t_start: f64,
    pub f: f64,
}

/// Validated exit-time model.
#[derive(Debug, Clone, PartialEq)]
pub struct HorizonSpec {
    horizon: f64,
    epsilon: f64,
    segments: Vec<DensitySegment>,
    /// `F` at each segment start.
    cdf_at_start: Vec<f64>,
    cdf_at_horizon: f64,
}

pub fn build_horizon(
    density: &[DensitySegment],
    horizon: f64,
    epsilon: f64,
) -> Result<HorizonSpec, HorizonError> {
    if !(horizon > 0.0 && horizon.is_finite()) {
        return Err(HorizonError::NonPositiveHorizon(horizon));
    }
    if !(epsilon > 0.0 && epsilon < 1.0) {
        return Err(HorizonError::InvalidEpsilon(epsilon));
    }
    let starts_ok = density.first().map(|s| s.t_start == 0.0).unwrap_or(false)
        && density.windows(2).all(|w| w[1].t_start > w[0].t_start)
        && density.iter().all(|s| s.t_start < horizon);
    if !starts_ok {
        return Err(HorizonError::ScheduleGap);
    }
    if let Some((segment, s)) =
        density.iter().enumerate().find(|(_, s)| !(s.f >= 0.0 && s.f.is_finite()))
    {
        return Err(HorizonError::NegativeDensity { segment, value: s.f });
    }
    let mut cdf_at_start = Vec::with_capacity(density.len());
    let mut acc = 0.0;
    for (k, s) in density.iter().enumerate() {
        cdf_at_start.push(acc);
        let end = density.get(k + 1).map_or(horizon, |n| n.t_start);
        acc += s.f * (end - s.t_start);
    }
    let bound = 1.0 - epsilon;
    if acc > bound + 1e-12 {
        return Err(HorizonError::SurvivalMarginViolated { cdf_at_horizon: acc, bound });
    }
    Ok(HorizonSpec {
        horizon,
        epsilon,
        segments: density.to_vec(),
        cdf_at_start,
        cdf_at_horizon: acc,
    })
}

impl HorizonSpec {
    /// Constant density `f` on `[0, horizon]`.
    pub fn constant(f: f64, horizon: f64, epsilon: f64) -> Result<Self, HorizonError> {
        build_horizon(&[DensitySegment { t_start: 0.0, f }], horizon, epsilon)
    }

    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    pub fn segments(&self) -> &[DensitySegment] {
        &self.segments
    }

    /// `F(T)`.
    pub fn cdf_at_horizon(&self) -> f64 {
        self.cdf_at_horizon
    }

    /// Probability of surviving to the horizon, `1 - F(T)`.
    pub fn survival(&self) -> f64 {
        1.0 - self.cdf_at_horizon
    }

    /// True when no exit can happen before `T`.
    pub fn is_deterministic(&self) -> bool {
        self.segments.iter().all(|s| s.f == 0.0)
    }

    #[inline]
    fn segment_index(&self, t: f64) -> usize {
        self.segments.partition_point(|s| s.t_start <= t).saturating_sub(1)
    }

    /// `f(t)`, right-continuous; times past either end use the nearest segment.
    #[inline]
    pub fn density_at(&self, t: f64) -> f64 {
        self.segments[self.segment_index(t)].f
    }

    /// `F(t) = ∫₀ᵗ f(s) ds`.
    pub fn cdf(&self, t: f64) -> Result<f64, HorizonError> {
        if !(0.0..=self.horizon).contains(&t) {
            return Err(HorizonError::OutOfRangeTime { t, horizon: self.horizon });
        }
        let k = self.segment_index(t);
        Ok(self.cdf_at_start[k] + self.segments[k].f * (t - self.segments[k].t_start))
    }

    /// Inverse-CDF draw of `τ ∧ T` from a uniform `u ∈ (0, 1)`.
    pub fn sample_exit(&self, u: f64) -> f64 {
        if u >= self.cdf_at_horizon {
            return self.horizon;
        }
        // The segment where F crosses u necessarily has f > 0.
        let k = self.cdf_at_start.partition_point(|&c| c <= u).saturating_sub(1);
        let mut k = k;
        while self.segments[k].f == 0.0 {
            k += 1;
        }
        let s = self.segments[k];
        let end = self.segments.get(k + 1).map_or(self.horizon, |n| n.t_start);
        (s.t_start + (u - self.cdf_at_start[k]) / s.f).min(end)
    }

    /// Interior segment starts.
    pub fn breakpoints(&self) -> Vec<f64> {
        self.segments.iter().map(|s| s.t_start).filter(|&t| t > 0.0).collect()
    }

    /// A copy with every density value multiplied by `factor`, bypassing the
    /// survival-margin check. Used to build deliberately mis-specified exit
    /// models in tests of the Monte Carlo cross-checks.
    #[doc(hidden)]
    pub fn scaled_unchecked(&self, factor: f64) -> Self {
        let segments: Vec<DensitySegment> = self
            .segments
            .iter()
            .map(|s| DensitySegment { t_start: s.t_start, f: s.f * factor })
            .collect();
        HorizonSpec {
            horizon: self.horizon,
            epsilon: self.epsilon,
            cdf_at_start: self.cdf_at_start.iter().map(|c| c * factor).collect(),
            cdf_at_horizon: self.cdf_at_horizon * factor,
            segments,
        }
    }
}
