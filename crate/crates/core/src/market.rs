//! Bond and stock coefficients per regime, and the wealth dynamics they
//! induce.
//!
//! Every coefficient is a piecewise-constant function of time, one schedule
//! per regime. A schedule is a list of segments, each active from its
//! `t_start` until the next segment's start (the last runs to the horizon).

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Default lower bound for the smallest eigenvalue of `σσᵀ`.
pub const DEFAULT_DELTA_FLOOR: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum MarketError {
    #[error("market has no regimes")]
    NoRegimes,
    #[error("horizon must be positive and finite, got {0}")]
    NonPositiveHorizon(f64),
    #[error("regime {regime}: schedule must start at 0 and have increasing segment starts inside [0, T)")]
    ScheduleGap { regime: usize },
    #[error("regime {regime}, segment {segment}: interest rate {r} is not positive")]
    NonPositiveRate { regime: usize, segment: usize, r: f64 },
    #[error("regime {regime}, segment {segment}: smallest eigenvalue of sigma sigma^T is {eigenvalue}, below the floor {floor}")]
    DegenerateVolatility { regime: usize, segment: usize, eigenvalue: f64, floor: f64 },
    #[error("regime {regime}, segment {segment}: expected {expected} assets, found {found}")]
    DimensionMismatch { regime: usize, segment: usize, expected: usize, found: usize },
    #[error("regime {regime}, segment {segment}: coefficient is not finite")]
    NonFinite { regime: usize, segment: usize },
    #[error("time {t} outside [0, {horizon}]")]
    OutOfRangeTime { t: f64, horizon: f64 },
    #[error("regime {regime} out of range for a market with {n_regimes} regimes")]
    RegimeOutOfRange { regime: usize, n_regimes: usize },
}

/// One schedule segment as written in a model config: rates per year,
/// volatilities per square-root year.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SegmentSpec {
    pub t_start: f64,
    pub r: f64,
    pub mu: Vec<f64>,
    pub sigma: Vec<Vec<f64>>,
}

/// Coefficients of one segment with the derived quantities used downstream.
#[derive(Debug, Clone, PartialEq)]
pub struct Coefficients {
    pub t_start: f64,
    pub r: f64,
    pub mu: DVector<f64>,
    pub sigma: DMatrix<f64>,
    /// `B = μ - r·1`.
    pub excess: DVector<f64>,
    /// Market price of risk `θ = σ⁻¹B`, so `|θ|² = Bᵀ(σσᵀ)⁻¹B`.
    pub theta: DVector<f64>,
    pub theta_sq: f64,
    /// `(σᵀ)⁻¹θ = (σσᵀ)⁻¹B`, the direction of every optimal feedback.
    pub risk_direction: DVector<f64>,
}

impl Coefficients {
    /// Euler increment of `dx = [r x + Bᵀπ] dt + πᵀσ dW`.
    #[inline]
    pub fn wealth_increment(&self, x: f64, portfolio: &[f64], dt: f64, dw: &[f64]) -> f64 {
        let n = portfolio.len();
        let mut drift = self.r * x;
        let mut noise = 0.0;
        for m in 0..n {
            drift += self.excess[m] * portfolio[m];
            let mut loading = 0.0;
            for j in 0..n {
                loading += self.sigma[(m, j)] * dw[j];
            }
            noise += portfolio[m] * loading;
        }
        drift * dt + noise
    }
}

/// Wealth `x` at time `t` in a given regime.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WealthState {
    pub x: f64,
    pub t: f64,
    pub regime: usize,
}

/// A validated regime-switching market.
#[derive(Debug, Clone, PartialEq)]
pub struct MarketModel {
    n_assets: usize,
    horizon: f64,
    delta: f64,
    delta_floor: f64,
    regimes: Vec<Vec<Coefficients>>,
}

/// Validates per-regime schedules and precomputes `B`, `θ` and the feedback
/// direction for every segment.
pub fn build_market(
    regimes: &[Vec<SegmentSpec>],
    horizon: f64,
    delta_floor: f64,
) -> Result<MarketModel, MarketError> {
    if regimes.is_empty() {
        return Err(MarketError::NoRegimes);
    }
    if !(horizon > 0.0 && horizon.is_finite()) {
        return Err(MarketError::NonPositiveHorizon(horizon));
    }
    let n_assets = regimes[0].first().map(|s| s.mu.len()).unwrap_or(0);
    let mut delta = f64::INFINITY;
    let mut built = Vec::with_capacity(regimes.len());
    for (regime, schedule) in regimes.iter().enumerate() {
        let starts_ok = schedule.first().map(|s| s.t_start == 0.0).unwrap_or(false)
            && schedule.windows(2).all(|w| w[1].t_start > w[0].t_start)
            && schedule.iter().all(|s| s.t_start < horizon);
        if !starts_ok {
            return Err(MarketError::ScheduleGap { regime });
        }
        let mut segments = Vec::with_capacity(schedule.len());
        for (segment, spec) in schedule.iter().enumerate() {
            let coeffs = build_segment(regime, segment, spec, n_assets)?;
            let eig = min_eigenvalue(&coeffs.sigma);
            if !(eig >= delta_floor) || eig <= 0.0 {
                return Err(MarketError::DegenerateVolatility {
                    regime,
                    segment,
                    eigenvalue: eig,
                    floor: delta_floor,
                });
            }
            if coeffs.sigma.iter().any(|&s| s < 0.0) {
                log::warn!(
                    "regime {regime}, segment {segment}: negative volatility entries; \
                     the frontier formulas do not depend on their sign"
                );
            }
            delta = delta.min(eig);
            segments.push(coeffs);
        }
        built.push(segments);
    }
    Ok(MarketModel { n_assets, horizon, delta, delta_floor, regimes: built })
}

fn build_segment(
    regime: usize,
    segment: usize,
    spec: &SegmentSpec,
    n_assets: usize,
) -> Result<Coefficients, MarketError> {
    let mismatch = |found| MarketError::DimensionMismatch { regime, segment, expected: n_assets, found };
    if n_assets == 0 || spec.mu.len() != n_assets {
        return Err(mismatch(spec.mu.len()));
    }
    if spec.sigma.len() != n_assets {
        return Err(mismatch(spec.sigma.len()));
    }
    if let Some(row) = spec.sigma.iter().find(|row| row.len() != n_assets) {
        return Err(mismatch(row.len()));
    }
    let finite = spec.r.is_finite()
        && spec.t_start.is_finite()
        && spec.mu.iter().all(|v| v.is_finite())
        && spec.sigma.iter().flatten().all(|v| v.is_finite());
    if !finite {
        return Err(MarketError::NonFinite { regime, segment });
    }
    if !(spec.r > 0.0) {
        return Err(MarketError::NonPositiveRate { regime, segment, r: spec.r });
    }
    let mu = DVector::from_column_slice(&spec.mu);
    let sigma = DMatrix::from_fn(n_assets, n_assets, |m, j| spec.sigma[m][j]);
    let excess = mu.map(|v| v - spec.r);
    let degenerate = |eigenvalue| MarketError::DegenerateVolatility {
        regime,
        segment,
        eigenvalue,
        floor: 0.0,
    };
    let lu = sigma.clone().lu();
    let theta = lu.solve(&excess).ok_or_else(|| degenerate(0.0))?;
    let risk_direction = sigma.transpose().lu().solve(&theta).ok_or_else(|| degenerate(0.0))?;
    let theta_sq = theta.norm_squared();
    Ok(Coefficients {
        t_start: spec.t_start,
        r: spec.r,
        mu,
        sigma,
        excess,
        theta,
        theta_sq,
        risk_direction,
    })
}

fn min_eigenvalue(sigma: &DMatrix<f64>) -> f64 {
    let gram = sigma * sigma.transpose();
    gram.symmetric_eigen().eigenvalues.iter().copied().fold(f64::INFINITY, f64::min)
}

impl MarketModel {
    pub fn n_assets(&self) -> usize {
        self.n_assets
    }

    pub fn n_regimes(&self) -> usize {
        self.regimes.len()
    }

    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    /// Smallest eigenvalue of `σσᵀ` over all regimes and segments.
    pub fn delta(&self) -> f64 {
        self.delta
    }

    pub fn delta_floor(&self) -> f64 {
        self.delta_floor
    }

    /// Segments of one regime's schedule.
    pub fn schedule(&self, regime: usize) -> &[Coefficients] {
        &self.regimes[regime]
    }

    /// Smallest interest rate anywhere in the model.
    pub fn min_rate(&self) -> f64 {
        self.regimes.iter().flatten().map(|c| c.r).fold(f64::INFINITY, f64::min)
    }

    /// Coefficients active at `t` in `regime`, with range checks.
    pub fn coefficients(&self, t: f64, regime: usize) -> Result<&Coefficients, MarketError> {
        if !(0.0..=self.horizon).contains(&t) {
            return Err(MarketError::OutOfRangeTime { t, horizon: self.horizon });
        }
        if regime >= self.regimes.len() {
            return Err(MarketError::RegimeOutOfRange { regime, n_regimes: self.regimes.len() });
        }
        Ok(self.segment_at(t, regime))
    }

    /// Coefficients active at `t`; times past either end use the nearest segment.
    #[inline]
    pub(crate) fn segment_at(&self, t: f64, regime: usize) -> &Coefficients {
        let schedule = &self.regimes[regime];
        let k = schedule.partition_point(|c| c.t_start <= t);
        &schedule[k.saturating_sub(1)]
    }

    /// `B(t) = μ(t) - r(t)·1` in `regime`.
    pub fn excess_return(&self, t: f64, regime: usize) -> Result<DVector<f64>, MarketError> {
        Ok(self.coefficients(t, regime)?.excess.clone())
    }

    /// `θ(t) = σ(t)⁻¹B(t)` in `regime`.
    pub fn theta(&self, t: f64, regime: usize) -> Result<DVector<f64>, MarketError> {
        Ok(self.coefficients(t, regime)?.theta.clone())
    }

    /// Interior segment starts of every regime, sorted and deduplicated.
    pub fn breakpoints(&self) -> Vec<f64> {
        let mut out: Vec<f64> = self
            .regimes
            .iter()
            .flatten()
            .map(|c| c.t_start)
            .filter(|&t| t > 0.0)
            .collect();
        out.sort_by(f64::total_cmp);
        out.dedup();
        out
    }

    /// The schedules in config form, suitable for [`build_market`].
    pub fn to_specs(&self) -> Vec<Vec<SegmentSpec>> {
        self.regimes
            .iter()
            .map(|schedule| {
                schedule
                    .iter()
                    .map(|c| SegmentSpec {
                        t_start: c.t_start,
                        r: c.r,
                        mu: c.mu.iter().copied().collect(),
                        sigma: (0..self.n_assets)
                            .map(|m| c.sigma.row(m).iter().copied().collect())
                            .collect(),
                    })
                    .collect()
            })
            .collect()
    }

    /// One Euler–Maruyama step of the wealth equation with the regime held
    /// fixed; `dw` holds the Brownian increments over `dt`.
    pub fn wealth_step(
        &self,
        state: WealthState,
        portfolio: &[f64],
        dt: f64,
        dw: &[f64],
    ) -> WealthState {
        let coeffs = self.segment_at(state.t, state.regime);
        WealthState {
            x: state.x + coeffs.wealth_increment(state.x, portfolio, dt, dw),
            t: state.t + dt,
            regime: state.regime,
        }
    }
}
