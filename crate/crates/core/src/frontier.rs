//! Closed-form efficient frontier.
//!
//! Once `P`, `G` and `Δ` are known, the Lagrangian problem with multiplier
//! `λ` has value
//!
//! ```text
//! J(λ) = (½ p₀g₀² + Δ - 1)(λ - z)² + (p₀g₀x₀ - 2z)(λ - z) + ½ p₀x₀² - z²
//! ```
//!
//! which is a concave parabola in `λ` exactly when `½ p₀g₀² + Δ < 1`. Its
//! maximizer `λ*` gives the efficient strategy for target `z`, and the
//! maximum is the minimal variance of terminal wealth.

use std::sync::Arc;

use nalgebra::DVector;
use serde::Serialize;
use thiserror::Error;

use crate::bsde::{self, BackwardSolution, BsdeError, DeltaValue, RegimeCurves, TimeGrid};
use crate::chain::ChainError;
use crate::market::MarketModel;
use crate::model::Model;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum FrontierError {
    #[error("½·p0·g0² + Δ - 1 = {value} is not negative; the frontier is unbounded")]
    DenominatorNonNegative { value: f64 },
    #[error("the market offers no risk premium (γ = 0); only z = {z_zero} is attainable")]
    InfeasibleMarket { z_zero: f64 },
    #[error("targets {values:?} lie below the minimum-variance target {z_min}")]
    ZBelowMinimum { values: Vec<f64>, z_min: f64 },
    #[error("mutual-fund weight must be nonnegative, got {0}")]
    NegativeBeta(f64),
    #[error("time {t} outside [0, {horizon}]")]
    OutOfRangeTime { t: f64, horizon: f64 },
    #[error("regime {regime} out of range for a model with {n_regimes} regimes")]
    RegimeOutOfRange { regime: usize, n_regimes: usize },
    #[error("invalid frontier inputs: {0}")]
    InvalidInputs(&'static str),
    #[error("arrays are not on a common grid")]
    GridMismatch,
    #[error(transparent)]
    Bsde(#[from] BsdeError),
    #[error(transparent)]
    Chain(#[from] ChainError),
}

/// The scalars that determine the frontier.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FrontierInputs {
    pub p0: f64,
    pub g0: f64,
    pub delta: f64,
    pub x0: f64,
    pub i0: usize,
}

impl FrontierInputs {
    pub fn new(p0: f64, g0: f64, delta: f64, x0: f64, i0: usize) -> Result<Self, FrontierError> {
        if !(p0 > 0.0 && p0.is_finite()) {
            return Err(FrontierError::InvalidInputs("p0 must be positive"));
        }
        if !(g0 > 0.0 && g0 <= 1.0 + bsde::G_UPPER_SLACK) {
            return Err(FrontierError::InvalidInputs("g0 must lie in (0, 1]"));
        }
        if !(delta >= 0.0 && delta.is_finite()) {
            return Err(FrontierError::InvalidInputs("delta must be nonnegative"));
        }
        if !x0.is_finite() {
            return Err(FrontierError::InvalidInputs("x0 must be finite"));
        }
        let inputs = Self { p0, g0, delta, x0, i0 };
        inputs.check_condition()?;
        Ok(inputs)
    }

    /// `½ p₀g₀² + Δ - 1`; the frontier exists iff this is negative.
    pub fn condition_value(&self) -> f64 {
        0.5 * self.p0 * self.g0 * self.g0 + self.delta - 1.0
    }

    pub fn condition_holds(&self) -> bool {
        self.condition_value() < 0.0
    }

    fn check_condition(&self) -> Result<(), FrontierError> {
        let value = self.condition_value();
        if value < 0.0 {
            Ok(())
        } else {
            Err(FrontierError::DenominatorNonNegative { value })
        }
    }

    /// `2Δ + p₀g₀²`.
    fn curvature(&self) -> f64 {
        2.0 * self.delta + self.p0 * self.g0 * self.g0
    }
}

/// An efficient `(z, λ*, Var)` triple.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FrontierPoint {
    pub z: f64,
    pub lambda_star: f64,
    pub variance: f64,
    pub std_dev: f64,
}

/// The optimal multiplier for target `z`.
pub fn lambda_star(inputs: &FrontierInputs, z: f64) -> Result<f64, FrontierError> {
    inputs.check_condition()?;
    // z + (2z - p₀g₀x₀)/(c - 2) rearranged as c (z - z_min)/(c - 2), which
    // vanishes exactly at the vertex.
    let c = inputs.curvature();
    let z_min = inputs.p0 * inputs.g0 * inputs.x0 / c;
    Ok(c * (z - z_min) / (c - 2.0))
}

/// Value of the Lagrangian problem for target `z` and multiplier `lambda`:
/// the minimum of `E(x(τ∧T) - λ)² - (λ - z)²`.
pub fn optimal_cost(inputs: &FrontierInputs, z: f64, lambda: f64) -> f64 {
    let FrontierInputs { p0, g0, x0, .. } = *inputs;
    let nu = lambda - z;
    inputs.condition_value() * nu * nu + (p0 * g0 * x0 - 2.0 * z) * nu + 0.5 * p0 * x0 * x0 - z * z
}

/// Minimal variance of terminal wealth subject to mean `z`.
pub fn variance_at(inputs: &FrontierInputs, z: f64) -> Result<FrontierPoint, FrontierError> {
    let lambda = lambda_star(inputs, z)?;
    let FrontierInputs { p0, g0, delta, x0, .. } = *inputs;
    let c = inputs.curvature();
    let variance = (c / (2.0 - c)) * (z - p0 * g0 * x0 / c).powi(2) + p0 * delta * x0 * x0 / c;
    let variance = variance.max(0.0);
    Ok(FrontierPoint { z, lambda_star: lambda, variance, std_dev: variance.sqrt() })
}

/// The vertex of the frontier; its multiplier is exactly zero.
pub fn min_variance(inputs: &FrontierInputs) -> Result<FrontierPoint, FrontierError> {
    inputs.check_condition()?;
    let FrontierInputs { p0, g0, delta, x0, .. } = *inputs;
    let c = inputs.curvature();
    let variance = p0 * delta * x0 * x0 / c;
    Ok(FrontierPoint {
        z: p0 * g0 * x0 / c,
        lambda_star: 0.0,
        variance,
        std_dev: variance.sqrt(),
    })
}

/// Frontier points for ascending targets, all at or above `z_min`.
pub fn frontier_curve(
    inputs: &FrontierInputs,
    targets: &[f64],
) -> Result<Vec<FrontierPoint>, FrontierError> {
    let z_min = min_variance(inputs)?.z;
    let slack = 1e-12 * z_min.abs().max(1.0);
    let below: Vec<f64> = targets.iter().copied().filter(|&z| !(z >= z_min - slack)).collect();
    if !below.is_empty() {
        return Err(FrontierError::ZBelowMinimum { values: below, z_min });
    }
    let mut sorted = targets.to_vec();
    sorted.sort_by(f64::total_cmp);
    sorted.iter().map(|&z| variance_at(inputs, z)).collect()
}

/// `γ = ∫ Σ_i π_i Ψ_i² |B_i|² dt` by trapezoidal quadrature.
pub fn feasibility_gamma(
    grid: &TimeGrid,
    psi: &RegimeCurves,
    market: &MarketModel,
    occupation: &[Vec<f64>],
) -> Result<f64, FrontierError> {
    let n = market.n_regimes();
    if psi.n_regimes() != n
        || psi.len() != grid.len()
        || occupation.len() != grid.len()
        || occupation.iter().any(|row| row.len() != n)
    {
        return Err(FrontierError::GridMismatch);
    }
    let times = grid.times();
    let mut gamma = 0.0;
    let mut b_sq = vec![0.0; n];
    for k in 0..grid.n_steps() {
        let mid = 0.5 * (times[k] + times[k + 1]);
        for (i, b) in b_sq.iter_mut().enumerate() {
            *b = market.segment_at(mid, i).excess.norm_squared();
        }
        let node = |k: usize| -> f64 {
            (0..n).map(|i| occupation[k][i] * psi.at(i, k).powi(2) * b_sq[i]).sum()
        };
        gamma += 0.5 * (times[k + 1] - times[k]) * (node(k) + node(k + 1));
    }
    Ok(gamma)
}

/// Expected terminal wealth of the all-bond strategy, `Ψ_{i₀}(0) x₀`.
pub fn z_zero(psi: &RegimeCurves, x0: f64, i0: usize) -> f64 {
    psi.initial(i0) * x0
}

/// The open-loop portfolio `((z - z⁽⁰⁾)/γ) Ψ_α(t) B_α(t)`, which meets the
/// mean target `z` but is not efficient.
#[derive(Debug, Clone)]
pub struct FeasiblePortfolio {
    solution: Arc<BackwardSolution>,
    market: Arc<MarketModel>,
    scale: f64,
    target: f64,
}

impl FeasiblePortfolio {
    pub fn new(
        solution: Arc<BackwardSolution>,
        market: Arc<MarketModel>,
        z: f64,
        gamma: f64,
        z_zero: f64,
    ) -> Result<Self, FrontierError> {
        if !(gamma > 0.0) {
            return Err(FrontierError::InfeasibleMarket { z_zero });
        }
        Ok(Self { solution, market, scale: (z - z_zero) / gamma, target: z })
    }

    pub fn market(&self) -> &MarketModel {
        &self.market
    }

    /// `(z - z⁽⁰⁾)/γ`.
    pub fn scale(&self) -> f64 {
        self.scale
    }

    pub fn target(&self) -> f64 {
        self.target
    }

    pub fn portfolio(&self, t: f64, regime: usize) -> Result<DVector<f64>, FrontierError> {
        check_point(&self.market, t, regime)?;
        let mut out = vec![0.0; self.market.n_assets()];
        self.portfolio_into(t, regime, &mut out);
        Ok(DVector::from_vec(out))
    }

    #[inline]
    pub(crate) fn portfolio_into(&self, t: f64, regime: usize, out: &mut [f64]) {
        let psi = self.solution.psi.interpolate(&self.solution.grid, regime, t);
        let b = &self.market.segment_at(t, regime).excess;
        for (o, bm) in out.iter_mut().zip(b.iter()) {
            *o = self.scale * psi * bm;
        }
    }
}

fn check_point(market: &MarketModel, t: f64, regime: usize) -> Result<(), FrontierError> {
    if !(0.0..=market.horizon()).contains(&t) {
        return Err(FrontierError::OutOfRangeTime { t, horizon: market.horizon() });
    }
    if regime >= market.n_regimes() {
        return Err(FrontierError::RegimeOutOfRange { regime, n_regimes: market.n_regimes() });
    }
    Ok(())
}

/// The efficient feedback `π*(t, x, i) = -(σσᵀ)⁻¹B · [x + (λ* - z) G_i(t)]`.
#[derive(Debug, Clone)]
pub struct FeedbackLaw {
    solution: Arc<BackwardSolution>,
    market: Arc<MarketModel>,
    lambda_star: f64,
    target: f64,
}

impl FeedbackLaw {
    pub fn new(
        solution: Arc<BackwardSolution>,
        market: Arc<MarketModel>,
        lambda_star: f64,
        target: f64,
    ) -> Self {
        Self { solution, market, lambda_star, target }
    }

    pub fn lambda_star(&self) -> f64 {
        self.lambda_star
    }

    pub fn market(&self) -> &MarketModel {
        &self.market
    }

    /// The mean terminal wealth this law is built for.
    pub fn target(&self) -> f64 {
        self.target
    }

    /// `λ* - z`.
    pub fn shift(&self) -> f64 {
        self.lambda_star - self.target
    }

    pub fn optimal_control(
        &self,
        t: f64,
        x: f64,
        regime: usize,
    ) -> Result<DVector<f64>, FrontierError> {
        check_point(&self.market, t, regime)?;
        let mut out = vec![0.0; self.market.n_assets()];
        self.control_into(t, x, regime, &mut out);
        Ok(DVector::from_vec(out))
    }

    #[inline]
    pub(crate) fn control_into(&self, t: f64, x: f64, regime: usize, out: &mut [f64]) {
        let g = self.solution.g.interpolate(&self.solution.grid, regime, t);
        let bracket = x + self.shift() * g;
        let d = &self.market.segment_at(t, regime).risk_direction;
        for (o, dm) in out.iter_mut().zip(d.iter()) {
            *o = -dm * bracket;
        }
    }
}

/// `(1 - β) law_min + β law_1`. The combination is again an efficient
/// feedback, for target `(1 - β) z_min + β z₁`.
pub fn mutual_fund(
    beta: f64,
    law_min: &FeedbackLaw,
    law_1: &FeedbackLaw,
) -> Result<FeedbackLaw, FrontierError> {
    if !(beta >= 0.0) {
        return Err(FrontierError::NegativeBeta(beta));
    }
    if !Arc::ptr_eq(&law_min.solution, &law_1.solution) {
        return Err(FrontierError::GridMismatch);
    }
    if beta == 0.0 {
        return Ok(law_min.clone());
    }
    if beta == 1.0 {
        return Ok(law_1.clone());
    }
    let mix = |a: f64, b: f64| (1.0 - beta) * a + beta * b;
    Ok(FeedbackLaw {
        solution: Arc::clone(&law_min.solution),
        market: Arc::clone(&law_min.market),
        lambda_star: mix(law_min.lambda_star, law_1.lambda_star),
        target: mix(law_min.target, law_1.target),
    })
}

/// A solved model together with every frontier quantity for one initial
/// state.
#[derive(Debug, Clone)]
pub struct EfficientFrontier {
    model: Arc<Model>,
    market: Arc<MarketModel>,
    solution: Arc<BackwardSolution>,
    occupation: Vec<Vec<f64>>,
    delta: DeltaValue,
    gamma: f64,
    z_zero: f64,
    inputs: FrontierInputs,
}

impl EfficientFrontier {
    /// Solves the backward equations on a grid with step at most `step` and
    /// evaluates `Δ`, `γ` and `z⁽⁰⁾` for wealth `x0` in regime `i0`.
    pub fn build(model: &Model, step: f64, x0: f64, i0: usize) -> Result<Self, FrontierError> {
        if i0 >= model.n_regimes() {
            return Err(FrontierError::RegimeOutOfRange { regime: i0, n_regimes: model.n_regimes() });
        }
        let solution = bsde::solve(model, step)?;
        let occupation = model.generator().occupation_probabilities(i0, solution.grid.times())?;
        let delta = bsde::compute_delta(
            &solution.grid,
            &solution.p,
            &solution.g,
            model.horizon(),
            &occupation,
            model.generator(),
        )?;
        let gamma = feasibility_gamma(&solution.grid, &solution.psi, model.market(), &occupation)?;
        let z_zero = z_zero(&solution.psi, x0, i0);
        if !(gamma > 0.0) {
            return Err(FrontierError::InfeasibleMarket { z_zero });
        }
        let inputs =
            FrontierInputs::new(solution.p.initial(i0), solution.g.initial(i0), delta.delta, x0, i0)?;
        Ok(Self {
            market: Arc::new(model.market().clone()),
            model: Arc::new(model.clone()),
            solution: Arc::new(solution),
            occupation,
            delta,
            gamma,
            z_zero,
            inputs,
        })
    }

    pub fn model(&self) -> &Model {
        &self.model
    }

    pub fn solution(&self) -> &BackwardSolution {
        &self.solution
    }

    /// `π_i(t_k)` on the solution grid, `[k][i]`.
    pub fn occupation(&self) -> &[Vec<f64>] {
        &self.occupation
    }

    pub fn inputs(&self) -> &FrontierInputs {
        &self.inputs
    }

    pub fn delta(&self) -> DeltaValue {
        self.delta
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn z_zero(&self) -> f64 {
        self.z_zero
    }

    pub fn lambda_star(&self, z: f64) -> Result<f64, FrontierError> {
        lambda_star(&self.inputs, z)
    }

    pub fn variance_at(&self, z: f64) -> Result<FrontierPoint, FrontierError> {
        variance_at(&self.inputs, z)
    }

    pub fn min_variance(&self) -> FrontierPoint {
        min_variance(&self.inputs).expect("condition checked at construction")
    }

    pub fn curve(&self, targets: &[f64]) -> Result<Vec<FrontierPoint>, FrontierError> {
        frontier_curve(&self.inputs, targets)
    }

    /// The efficient feedback for target `z`.
    pub fn law(&self, z: f64) -> Result<FeedbackLaw, FrontierError> {
        Ok(FeedbackLaw::new(
            Arc::clone(&self.solution),
            Arc::clone(&self.market),
            self.lambda_star(z)?,
            z,
        ))
    }

    /// The minimum-variance feedback, built with `λ* = 0`.
    pub fn min_variance_law(&self) -> FeedbackLaw {
        let z_min = self.min_variance().z;
        FeedbackLaw::new(Arc::clone(&self.solution), Arc::clone(&self.market), 0.0, z_min)
    }

    pub fn feasible_portfolio(&self, z: f64) -> Result<FeasiblePortfolio, FrontierError> {
        FeasiblePortfolio::new(
            Arc::clone(&self.solution),
            Arc::clone(&self.market),
            z,
            self.gamma,
            self.z_zero,
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::testing::{scalar_model, two_regime_model};
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn riskless_rollup() -> f64 {
        0.1f64.exp()
    }

    fn classical_frontier(z: f64) -> f64 {
        (z - riskless_rollup()).powi(2) / (0.16f64.exp() - 1.0)
    }

    fn example(f: f64) -> EfficientFrontier {
        EfficientFrontier::build(&scalar_model(0.1, 0.3, 0.5, f), 1e-4, 1.0, 0).unwrap()
    }

    #[test]
    fn complete_market_frontier() {
        let ef = example(0.0);
        assert_eq!(ef.delta().delta, 0.0);
        let min = ef.min_variance();
        assert_relative_eq!(min.z, riskless_rollup(), max_relative = 1e-10);
        assert_eq!(min.variance, 0.0);
        for z in [1.1, 1.11, 1.2, 1.5] {
            let v = ef.variance_at(z).unwrap().variance;
            assert_relative_eq!(v, classical_frontier(z), max_relative = 1e-6);
        }
        assert!((ef.variance_at(1.2).unwrap().variance - 0.051828).abs() < 1e-6);
    }

    #[test]
    fn lambda_star_example() {
        let ef = example(0.0);
        let expected = (2.4 - 2.0 * (-0.06f64).exp()) / (2.0 * (-0.16f64).exp() - 2.0);
        assert_relative_eq!(ef.lambda_star(1.2).unwrap() - 1.2, expected, max_relative = 1e-9);
        assert_eq!(ef.lambda_star(ef.min_variance().z).unwrap(), 0.0);
    }

    #[test]
    fn lambda_star_is_affine_with_known_slope() {
        let ef = example(0.5);
        let i = ef.inputs();
        let slope = 1.0 + 2.0 / (i.p0 * i.g0 * i.g0 + 2.0 * i.delta - 2.0);
        let (a, b, c) = (1.1, 1.3, 1.7);
        let (la, lb, lc) = (ef.lambda_star(a).unwrap(), ef.lambda_star(b).unwrap(), ef.lambda_star(c).unwrap());
        assert_relative_eq!((lb - la) / (b - a), slope, max_relative = 1e-10);
        assert_relative_eq!((lc - lb) / (c - b), slope, max_relative = 1e-10);
    }

    #[test]
    fn variance_is_the_lagrangian_maximum() {
        let ef = example(0.5);
        for z in [1.1, 1.2, 1.4] {
            let p = ef.variance_at(z).unwrap();
            assert_relative_eq!(optimal_cost(ef.inputs(), z, p.lambda_star), p.variance, max_relative = 1e-10);
            for d in [-0.1, 0.05, 0.3] {
                assert!(optimal_cost(ef.inputs(), z, p.lambda_star + d) < p.variance);
            }
        }
    }

    #[test]
    fn random_exit_adds_irreducible_variance() {
        let ef = example(0.5);
        assert!(ef.delta().delta > 0.0);
        let min = ef.min_variance();
        assert!(min.variance > 0.0);
        let i = ef.inputs();
        let c = 2.0 * i.delta + i.p0 * i.g0 * i.g0;
        assert_eq!(min.variance, i.p0 * i.delta / c);
        assert_relative_eq!(ef.variance_at(min.z).unwrap().variance, min.variance, max_relative = 1e-12);
    }

    #[test]
    fn hazard_ordering_at_fixed_target() {
        let v: Vec<f64> = [0.0, 0.5, 0.8].iter().map(|&f| example(f).variance_at(1.3).unwrap().variance).collect();
        assert!(v[0] < v[1] && v[1] < v[2], "{v:?}");
    }

    #[test]
    fn zero_wealth_zero_target() {
        let ef = EfficientFrontier::build(&scalar_model(0.1, 0.3, 0.5, 0.5), 1e-3, 0.0, 0).unwrap();
        assert_eq!(ef.variance_at(0.0).unwrap().variance, 0.0);
        let min = ef.min_variance();
        assert_eq!((min.z, min.variance), (0.0, 0.0));
        assert_eq!(ef.z_zero(), 0.0);
    }

    #[test]
    fn gamma_and_feasible_portfolio_examples() {
        let ef = EfficientFrontier::build(&scalar_model(0.1, 0.3, 0.5, 0.0), 1e-3, 1.0, 0).unwrap();
        let gamma = 0.04 * (0.2f64.exp() - 1.0) / 0.2;
        assert_relative_eq!(ef.gamma(), gamma, max_relative = 1e-6);
        assert!((ef.gamma() - 0.044281).abs() < 1e-6);
        assert_relative_eq!(ef.z_zero(), riskless_rollup(), max_relative = 1e-10);

        let z = 1.3;
        let pi = ef.feasible_portfolio(z).unwrap().portfolio(0.0, 0).unwrap();
        let expected = (z - riskless_rollup()) / gamma * riskless_rollup() * 0.2;
        assert_relative_eq!(pi[0], expected, max_relative = 1e-6);

        let at_z0 = ef.feasible_portfolio(ef.z_zero()).unwrap();
        assert_eq!(at_z0.portfolio(0.4, 0).unwrap()[0], 0.0);
        let one = ef.feasible_portfolio(z).unwrap().portfolio(0.7, 0).unwrap()[0];
        let two = ef.feasible_portfolio(2.0 * z - ef.z_zero()).unwrap().portfolio(0.7, 0).unwrap()[0];
        assert_relative_eq!(two, 2.0 * one, max_relative = 1e-14);
    }

    #[test]
    fn no_risk_premium_is_infeasible() {
        let m = scalar_model(0.1, 0.1, 0.5, 0.5);
        let err = EfficientFrontier::build(&m, 1e-3, 1.0, 0).unwrap_err();
        let FrontierError::InfeasibleMarket { z_zero } = err else { panic!("{err:?}") };
        let representation = 0.5 * 0.1f64.exp() + 0.5 * (0.1f64.exp() - 1.0) / 0.1;
        assert!((z_zero - representation).abs() < 1e-8);

        let solution = Arc::new(bsde::solve(&m, 1e-3).unwrap());
        let occ = m.generator().occupation_probabilities(0, solution.grid.times()).unwrap();
        let gamma = feasibility_gamma(&solution.grid, &solution.psi, m.market(), &occ).unwrap();
        assert_eq!(gamma, 0.0);
        let market = Arc::new(m.market().clone());
        assert!(matches!(
            FeasiblePortfolio::new(solution.clone(), market.clone(), 1.3, gamma, z_zero),
            Err(FrontierError::InfeasibleMarket { .. })
        ));
        let law = FeedbackLaw::new(solution, market, 0.7, 1.3);
        assert_eq!(law.optimal_control(0.5, 2.0, 0).unwrap()[0], 0.0);
    }

    #[test]
    fn feedback_examples() {
        let ef = example(0.5);
        let law = ef.law(1.2).unwrap();
        let g = ef.solution().g.interpolate(&ef.solution().grid, 0, 0.3);
        let x = -law.shift() * g;
        assert!(law.optimal_control(0.3, x, 0).unwrap()[0].abs() < 1e-14);
        let bracket = 1.05 + law.shift() * g;
        assert_relative_eq!(law.optimal_control(0.3, 1.05, 0).unwrap()[0], -0.8 * bracket, max_relative = 1e-14);
        assert!(matches!(law.optimal_control(1.5, 1.0, 0), Err(FrontierError::OutOfRangeTime { .. })));
        assert!(matches!(law.optimal_control(0.5, 1.0, 3), Err(FrontierError::RegimeOutOfRange { .. })));
    }

    #[test]
    fn mutual_fund_reproduces_direct_laws() {
        let ef = EfficientFrontier::build(&two_regime_model([0.05, 0.15], [0.3, 0.25], 0.5, 1.0), 1e-3, 1.0, 0)
            .unwrap();
        let min_law = ef.min_variance_law();
        let z1 = 1.4;
        let law_1 = ef.law(z1).unwrap();
        let z_min = ef.min_variance().z;
        for beta in [0.0, 0.25, 0.5, 1.0, 2.0] {
            let combined = mutual_fund(beta, &min_law, &law_1).unwrap();
            let direct = ef.law((1.0 - beta) * z_min + beta * z1).unwrap();
            for (t, x, i) in [(0.0, 1.0, 0), (0.37, 0.8, 1), (0.99, 1.6, 0)] {
                let a = min_law.optimal_control(t, x, i).unwrap()[0];
                let b = law_1.optimal_control(t, x, i).unwrap()[0];
                let pointwise = (1.0 - beta) * a + beta * b;
                let d = direct.optimal_control(t, x, i).unwrap()[0];
                let c = combined.optimal_control(t, x, i).unwrap()[0];
                assert!((pointwise - d).abs() < 1e-10);
                assert!((c - d).abs() < 1e-10);
            }
        }
        assert_eq!(mutual_fund(-0.5, &min_law, &law_1).unwrap_err(), FrontierError::NegativeBeta(-0.5));
    }

    #[test]
    fn curve_rejects_targets_below_vertex() {
        let ef = example(0.5);
        let z_min = ef.min_variance().z;
        let err = ef.curve(&[z_min - 0.1, 1.3]).unwrap_err();
        assert!(matches!(err, FrontierError::ZBelowMinimum { ref values, .. } if values.len() == 1));
        let one = ef.curve(&[z_min]).unwrap();
        assert_eq!(one.len(), 1);
        assert_eq!(one[0].variance, ef.min_variance().variance);
        let pts = ef.curve(&[1.5, 1.2, 1.3]).unwrap();
        assert!(pts.windows(2).all(|w| w[0].z < w[1].z && w[0].variance <= w[1].variance));
    }

    #[test]
    fn unbounded_frontier_is_refused() {
        let inputs = FrontierInputs { p0: 2.0, g0: 1.0, delta: 0.1, x0: 1.0, i0: 0 };
        assert!(matches!(variance_at(&inputs, 1.2), Err(FrontierError::DenominatorNonNegative { .. })));
        assert!(matches!(lambda_star(&inputs, 1.2), Err(FrontierError::DenominatorNonNegative { .. })));
        assert!(FrontierInputs::new(2.0, 1.0, 0.1, 1.0, 0).is_err());
    }

    proptest! {
        #[test]
        fn scaling_wealth_and_target_quadruples_variance(
            p0 in 0.5f64..1.9, g0 in 0.2f64..1.0, delta in 0.0f64..0.2, x0 in 0.1f64..5.0, z in -3.0f64..3.0
        ) {
            let inputs = FrontierInputs { p0, g0, delta, x0, i0: 0 };
            prop_assume!(inputs.condition_value() < -1e-3);
            let doubled = FrontierInputs { x0: 2.0 * x0, ..inputs };
            let v = variance_at(&inputs, z).unwrap().variance;
            let v2 = variance_at(&doubled, 2.0 * z).unwrap().variance;
            prop_assert!((v2 - 4.0 * v).abs() <= 1e-10 * v2.abs().max(1.0));
        }

        #[test]
        fn vertex_is_the_minimum(
            p0 in 0.5f64..1.9, g0 in 0.2f64..1.0, delta in 0.0f64..0.2, x0 in 0.1f64..5.0, dz in -2.0f64..2.0
        ) {
            let inputs = FrontierInputs { p0, g0, delta, x0, i0: 0 };
            prop_assume!(inputs.condition_value() < -1e-3);
            let min = min_variance(&inputs).unwrap();
            let v = variance_at(&inputs, min.z + dz).unwrap().variance;
            prop_assert!(v >= min.variance - 1e-12);
        }
    }
}
