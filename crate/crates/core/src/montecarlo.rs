//! Monte Carlo simulation of controlled wealth with regime switching and a
//! random exit time.
//!
//! Each path draws a chain trajectory, an exit time and Brownian increments
//! from its own streams (see [`crate::streams`]). Wealth follows an
//! Euler–Maruyama scheme on the uniform grid refined at every chain jump,
//! at the exit time and at every coefficient breakpoint, so the regime and
//! the coefficients are constant on each substep. The portfolio is
//! evaluated at the start of each substep with the regime in force there.
//!
//! Paths always run to `T`. Besides `x(τ∧T)`, each path accumulates the
//! weighted form of the cost, `∫ f (x - z)² dt + (1 - F(T)) (x(T) - z)²`,
//! whose expectation equals `E(x(τ∧T) - z)²` without sampling `τ`.

use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::chain::ChainPath;
use crate::frontier::{EfficientFrontier, FeasiblePortfolio, FeedbackLaw, FrontierError};
use crate::horizon::HorizonSpec;
use crate::model::Model;
use crate::stats::{compensated_sum, SampleMoments};
use crate::streams::{path_rng, StreamKind};

/// Wealth magnitude treated as a numerical blowup.
pub const BLOWUP_THRESHOLD: f64 = 1e12;

/// Sample size below which variance z-scores are not reported as decisive.
pub const MIN_PATHS_FOR_VARIANCE: usize = 10_000;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SimError {
    #[error("invalid simulation config: {0}")]
    InvalidConfig(&'static str),
    #[error("wealth reached {x} at t = {t} on path {path}")]
    NumericalBlowup { path: usize, t: f64, x: f64 },
    #[error("strategy trades {strategy} assets but the market has {market}")]
    DimensionMismatch { strategy: usize, market: usize },
    #[error("regime {regime} out of range for a model with {n_regimes} regimes")]
    RegimeOutOfRange { regime: usize, n_regimes: usize },
    #[error(transparent)]
    Frontier(#[from] FrontierError),
}

/// A trading rule: amounts held in each stock given time, wealth and the
/// regime in force.
pub trait Strategy: Sync {
    fn n_assets(&self) -> usize;

    /// Writes the stock holdings into `out`.
    fn portfolio(&self, t: f64, x: f64, regime: usize, out: &mut [f64]);

    /// The expected terminal wealth the strategy aims for.
    fn target(&self) -> f64;
}

impl Strategy for FeedbackLaw {
    fn n_assets(&self) -> usize {
        self.market().n_assets()
    }

    fn portfolio(&self, t: f64, x: f64, regime: usize, out: &mut [f64]) {
        self.control_into(t, x, regime, out);
    }

    fn target(&self) -> f64 {
        FeedbackLaw::target(self)
    }
}

impl Strategy for FeasiblePortfolio {
    fn n_assets(&self) -> usize {
        self.market().n_assets()
    }

    fn portfolio(&self, t: f64, _x: f64, regime: usize, out: &mut [f64]) {
        self.portfolio_into(t, regime, out);
    }

    fn target(&self) -> f64 {
        FeasiblePortfolio::target(self)
    }
}

/// Everything in the bond.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AllBond {
    pub n_assets: usize,
    /// Reference level for the cost estimators.
    pub target: f64,
}

impl Strategy for AllBond {
    fn n_assets(&self) -> usize {
        self.n_assets
    }

    fn portfolio(&self, _t: f64, _x: f64, _regime: usize, out: &mut [f64]) {
        out.fill(0.0);
    }

    fn target(&self) -> f64 {
        self.target
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, serde::Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimConfig {
    pub n_paths: usize,
    pub euler_step: f64,
    pub base_seed: u64,
    /// Pair every path with its mirror image (negated Brownian increments).
    #[serde(default)]
    pub antithetic: bool,
    /// Keep `(τ, x(τ∧T))` for every path.
    #[serde(default)]
    pub record_paths: bool,
}

impl Default for SimConfig {
    fn default() -> Self {
        Self { n_paths: 100_000, euler_step: 1e-3, base_seed: 0, antithetic: false, record_paths: false }
    }
}

impl SimConfig {
    pub fn validate(&self, horizon: f64) -> Result<(), SimError> {
        if self.n_paths < 2 {
            return Err(SimError::InvalidConfig("n_paths must be at least 2"));
        }
        if self.antithetic && self.n_paths % 2 != 0 {
            return Err(SimError::InvalidConfig("antithetic runs need an even n_paths"));
        }
        if !(self.euler_step > 0.0) {
            return Err(SimError::InvalidConfig("euler_step must be positive"));
        }
        if self.euler_step > horizon / 100.0 * (1.0 + 1e-12) {
            return Err(SimError::InvalidConfig("euler_step must be at most T/100"));
        }
        Ok(())
    }

    fn n_steps(&self, horizon: f64) -> usize {
        ((horizon / self.euler_step) - 1e-9).ceil().max(1.0) as usize
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PathRecord {
    pub path_id: usize,
    pub tau: f64,
    pub x_at_exit: f64,
}

/// Estimates from one batch of paths.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SimResult {
    pub n_paths: usize,
    pub target: f64,
    /// Sample mean of `x(τ∧T)`.
    pub mean_terminal: f64,
    /// Unbiased sample variance of `x(τ∧T)`.
    pub var_terminal: f64,
    pub se_mean: f64,
    pub se_var: f64,
    /// `E(x(τ∧T) - z)²` from the sampled exit times.
    pub j_mv_sampled: f64,
    pub se_j_mv_sampled: f64,
    /// `E(x(τ∧T) - z)²` from the weighted representation.
    pub j_mv_weighted: f64,
    pub se_j_mv_weighted: f64,
    /// Standard error of the per-path difference of the two cost estimators.
    pub se_j_mv_difference: f64,
    /// `E x(τ∧T)` from the weighted representation.
    pub j1_weighted: f64,
    pub se_j1_weighted: f64,
    /// Mean of `x(T)`, ignoring the exit time.
    pub mean_at_horizon: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub paths: Option<Vec<PathRecord>>,
}

impl SimResult {
    /// `(mean_terminal - z) / se_mean`.
    pub fn mean_z_score(&self, z: f64) -> f64 {
        z_score(self.mean_terminal - z, self.se_mean)
    }

    /// `(var_terminal - v) / se_var`.
    pub fn var_z_score(&self, v: f64) -> f64 {
        z_score(self.var_terminal - v, self.se_var)
    }
}

/// `d / se`, with a zero standard error giving `0` for `d = 0` and an
/// infinite score otherwise.
pub fn z_score(d: f64, se: f64) -> f64 {
    if se > 0.0 {
        d / se
    } else if d == 0.0 {
        0.0
    } else {
        f64::INFINITY.copysign(d)
    }
}

struct PathOutcome {
    tau: f64,
    x_exit: f64,
    x_horizon: f64,
    /// `∫ f x dt + (1 - F(T)) x(T)`.
    weighted_linear: f64,
    /// `∫ f (x - z)² dt + (1 - F(T)) (x(T) - z)²`.
    weighted_square: f64,
}

/// Step layout shared by a path's Euler grid and its Brownian draws: the
/// grid has `n_steps` uniform steps and every step's increment is built
/// from `draws_per_step` independent normals.
#[derive(Debug, Clone, Copy)]
struct Layout {
    n_steps: usize,
    draws_per_step: usize,
}

struct PathContext<'a, S: ?Sized> {
    model: &'a Model,
    strategy: &'a S,
    exit_law: &'a HorizonSpec,
    x0: f64,
    i0: usize,
    layout: Layout,
    breakpoints: Vec<f64>,
}

impl<S: Strategy + ?Sized> PathContext<'_, S> {
    fn run(&self, base_seed: u64, stream: u64, sign: f64, path_id: usize) -> Result<PathOutcome, SimError> {
        let model = self.model;
        let horizon = model.terminal_time();
        let weights = model.horizon();
        let market = model.market();
        let n_assets = market.n_assets();
        let z = self.strategy.target();

        let chain: ChainPath =
            model.generator().sample_path(self.i0, horizon, &mut path_rng(base_seed, stream, StreamKind::Chain));
        let u: f64 = path_rng(base_seed, stream, StreamKind::Exit).random();
        let tau = self.exit_law.sample_exit(u);
        let mut normals = path_rng(base_seed, stream, StreamKind::Brownian);
        let mut bridge = path_rng(base_seed, stream, StreamKind::Bridge);

        let mut events: Vec<f64> = chain.jump_times().to_vec();
        if tau < horizon {
            events.push(tau);
        }
        events.extend(self.breakpoints.iter().copied());
        events.sort_by(f64::total_cmp);
        events.dedup();

        let Layout { n_steps, draws_per_step } = self.layout;
        let dt = horizon / n_steps as f64;
        let sub_scale = (dt / draws_per_step as f64).sqrt();
        let mut x = self.x0;
        let mut x_exit = if tau <= 0.0 { x } else { f64::NAN };
        let mut weighted_linear = 0.0;
        let mut weighted_square = 0.0;
        let mut step_increment = vec![0.0; n_assets];
        let mut dw = vec![0.0; n_assets];
        let mut pi = vec![0.0; n_assets];
        let mut cuts: Vec<f64> = Vec::with_capacity(4);
        let mut next_event = 0;

        for k in 0..n_steps {
            let a = horizon * k as f64 / n_steps as f64;
            let b = if k + 1 == n_steps { horizon } else { horizon * (k + 1) as f64 / n_steps as f64 };
            for w in step_increment.iter_mut() {
                *w = 0.0;
            }
            for _ in 0..draws_per_step {
                for w in step_increment.iter_mut() {
                    let e: f64 = normals.sample(StandardNormal);
                    *w += sign * sub_scale * e;
                }
            }
            cuts.clear();
            while next_event < events.len() && events[next_event] <= a {
                next_event += 1;
            }
            while next_event < events.len() && events[next_event] < b {
                cuts.push(events[next_event]);
                next_event += 1;
            }
            cuts.push(b);

            let mut u0 = a;
            for &v in &cuts {
                let len = v - u0;
                if v < b {
                    // Brownian bridge: split the remaining increment over [u0, b].
                    let rest = b - u0;
                    let frac = len / rest;
                    let sd = (len * (b - v) / rest).sqrt();
                    for m in 0..n_assets {
                        let e: f64 = bridge.sample(StandardNormal);
                        dw[m] = frac * step_increment[m] + sign * sd * e;
                        step_increment[m] -= dw[m];
                    }
                } else {
                    dw.copy_from_slice(&step_increment);
                }
                let regime = chain.regime_at(u0);
                self.strategy.portfolio(u0, x, regime, &mut pi);
                let coeffs = market.segment_at(u0, regime);
                let x_next = x + coeffs.wealth_increment(x, &pi, len, &dw);
                if !(x_next.abs() <= BLOWUP_THRESHOLD) {
                    return Err(SimError::NumericalBlowup { path: path_id, t: v, x: x_next });
                }
                let f = weights.density_at(0.5 * (u0 + v));
                if f > 0.0 {
                    weighted_linear += 0.5 * len * f * (x + x_next);
                    weighted_square += 0.5 * len * f * ((x - z).powi(2) + (x_next - z).powi(2));
                }
                x = x_next;
                u0 = v;
                if x_exit.is_nan() && v >= tau {
                    x_exit = x;
                }
            }
        }
        if x_exit.is_nan() {
            x_exit = x;
        }
        let survival = weights.survival();
        weighted_linear += survival * x;
        weighted_square += survival * (x - z).powi(2);
        Ok(PathOutcome { tau: tau.min(horizon), x_exit, x_horizon: x, weighted_linear, weighted_square })
    }
}

/// Simulates `strategy` from wealth `x0` in regime `i0`.
pub fn simulate<S: Strategy + ?Sized>(
    model: &Model,
    strategy: &S,
    x0: f64,
    i0: usize,
    cfg: &SimConfig,
) -> Result<SimResult, SimError> {
    simulate_with_exit_law(model, model.horizon(), strategy, x0, i0, cfg)
}

/// As [`simulate`], but exit times are drawn from `exit_law` while the
/// weighted estimators keep using the model's density. With `exit_law`
/// equal to the model's own law this is `simulate`; anything else builds a
/// deliberately inconsistent run for testing the cost cross-check.
#[doc(hidden)]
pub fn simulate_with_exit_law<S: Strategy + ?Sized>(
    model: &Model,
    exit_law: &HorizonSpec,
    strategy: &S,
    x0: f64,
    i0: usize,
    cfg: &SimConfig,
) -> Result<SimResult, SimError> {
    cfg.validate(model.terminal_time())?;
    let layout = Layout { n_steps: cfg.n_steps(model.terminal_time()), draws_per_step: 1 };
    let outcomes = run_paths(model, exit_law, strategy, x0, i0, cfg, layout)?;
    Ok(summarize(&outcomes, strategy.target(), cfg))
}

fn run_paths<S: Strategy + ?Sized>(
    model: &Model,
    exit_law: &HorizonSpec,
    strategy: &S,
    x0: f64,
    i0: usize,
    cfg: &SimConfig,
    layout: Layout,
) -> Result<Vec<PathOutcome>, SimError> {
    if strategy.n_assets() != model.market().n_assets() {
        return Err(SimError::DimensionMismatch {
            strategy: strategy.n_assets(),
            market: model.market().n_assets(),
        });
    }
    if i0 >= model.n_regimes() {
        return Err(SimError::RegimeOutOfRange { regime: i0, n_regimes: model.n_regimes() });
    }
    let ctx = PathContext {
        model,
        strategy,
        exit_law,
        x0,
        i0,
        layout,
        breakpoints: model.breakpoints(),
    };
    let antithetic = cfg.antithetic;
    (0..cfg.n_paths)
        .into_par_iter()
        .map(|p| {
            let (stream, sign) = if antithetic {
                ((p / 2) as u64, if p % 2 == 0 { 1.0 } else { -1.0 })
            } else {
                (p as u64, 1.0)
            };
            ctx.run(cfg.base_seed, stream, sign, p)
        })
        .collect()
}

/// Mean and standard error; antithetic pairs are averaged first.
fn mean_and_se(values: &[f64], antithetic: bool) -> (f64, f64) {
    if antithetic {
        let pairs: Vec<f64> = values.chunks_exact(2).map(|c| 0.5 * (c[0] + c[1])).collect();
        let m = SampleMoments::from_samples(&pairs);
        (m.mean, m.se_mean)
    } else {
        let m = SampleMoments::from_samples(values);
        (m.mean, m.se_mean)
    }
}

fn summarize(outcomes: &[PathOutcome], z: f64, cfg: &SimConfig) -> SimResult {
    let n = outcomes.len();
    let anti = cfg.antithetic;
    let exits: Vec<f64> = outcomes.iter().map(|o| o.x_exit).collect();
    let moments = SampleMoments::from_samples(&exits);
    let (mean_terminal, se_mean) = mean_and_se(&exits, anti);
    let sampled: Vec<f64> = exits.iter().map(|x| (x - z).powi(2)).collect();
    let weighted: Vec<f64> = outcomes.iter().map(|o| o.weighted_square).collect();
    let diff: Vec<f64> = sampled.iter().zip(&weighted).map(|(a, b)| a - b).collect();
    let linear: Vec<f64> = outcomes.iter().map(|o| o.weighted_linear).collect();
    let (j_mv_sampled, se_j_mv_sampled) = mean_and_se(&sampled, anti);
    let (j_mv_weighted, se_j_mv_weighted) = mean_and_se(&weighted, anti);
    let (_, se_j_mv_difference) = mean_and_se(&diff, anti);
    let (j1_weighted, se_j1_weighted) = mean_and_se(&linear, anti);
    let mean_at_horizon = compensated_sum(outcomes.iter().map(|o| o.x_horizon)) / n as f64;
    let paths = cfg.record_paths.then(|| {
        outcomes
            .iter()
            .enumerate()
            .map(|(path_id, o)| PathRecord { path_id, tau: o.tau, x_at_exit: o.x_exit })
            .collect()
    });
    SimResult {
        n_paths: n,
        target: z,
        mean_terminal,
        var_terminal: moments.variance,
        se_mean,
        se_var: moments.se_variance,
        j_mv_sampled,
        se_j_mv_sampled,
        j_mv_weighted,
        se_j_mv_weighted,
        se_j_mv_difference,
        j1_weighted,
        se_j1_weighted,
        mean_at_horizon,
        paths,
    }
}

/// Agreement between the sampled and the weighted cost estimators.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DualCostReport {
    pub difference: f64,
    pub joint_se: f64,
    pub z_score: f64,
    pub pass: bool,
}

pub fn dual_cost_check(result: &SimResult) -> DualCostReport {
    let difference = result.j_mv_sampled - result.j_mv_weighted;
    let joint_se = result.se_j_mv_difference;
    let z = z_score(difference, joint_se);
    DualCostReport { difference, joint_se, z_score: z, pass: z.abs() <= 3.0 }
}

/// One row of an analytic-versus-simulated frontier comparison.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ValidationRow {
    pub z: f64,
    pub lambda_star: f64,
    pub analytic_variance: f64,
    pub simulated_mean: f64,
    pub se_mean: f64,
    pub simulated_variance: f64,
    pub se_variance: f64,
    pub mean_z_score: f64,
    pub variance_z_score: f64,
}

impl ValidationRow {
    pub fn pass(&self) -> bool {
        self.mean_z_score.abs() <= 3.0 && self.variance_z_score.abs() <= 3.0
    }
}

/// Simulates the efficient strategy for every target and compares the
/// terminal mean and variance with the closed form.
pub fn frontier_validation(
    frontier: &EfficientFrontier,
    targets: &[f64],
    cfg: &SimConfig,
) -> Result<Vec<ValidationRow>, SimError> {
    let inputs = frontier.inputs();
    targets
        .iter()
        .map(|&z| {
            let point = frontier.variance_at(z)?;
            let law = frontier.law(z)?;
            let sim = simulate(frontier.model(), &law, inputs.x0, inputs.i0, cfg)?;
            Ok(ValidationRow {
                z,
                lambda_star: point.lambda_star,
                analytic_variance: point.variance,
                simulated_mean: sim.mean_terminal,
                se_mean: sim.se_mean,
                simulated_variance: sim.var_terminal,
                se_variance: sim.se_var,
                mean_z_score: sim.mean_z_score(z),
                variance_z_score: sim.var_z_score(point.variance),
            })
        })
        .collect()
}

/// Step-halving comparison of the terminal mean.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RefinementReport {
    pub mean_coarse: f64,
    pub mean_fine: f64,
    /// Standard error of the coarse mean.
    pub se_mean: f64,
    pub difference: f64,
}

impl RefinementReport {
    /// `|difference| / se_mean`.
    pub fn ratio(&self) -> f64 {
        z_score(self.difference, self.se_mean).abs()
    }
}

/// Runs the strategy at `cfg.euler_step` and at half that step on the same
/// chain paths, exit times and Brownian paths: each coarse increment is the
/// sum of the two fine increments it covers. The difference of the two
/// means then isolates the discretization bias.
pub fn euler_refinement<S: Strategy + ?Sized>(
    model: &Model,
    strategy: &S,
    x0: f64,
    i0: usize,
    cfg: &SimConfig,
) -> Result<RefinementReport, SimError> {
    cfg.validate(model.terminal_time())?;
    let coarse_steps = cfg.n_steps(model.terminal_time());
    let coarse = Layout { n_steps: coarse_steps, draws_per_step: 2 };
    let fine = Layout { n_steps: 2 * coarse_steps, draws_per_step: 1 };
    let plain = SimConfig { record_paths: false, ..*cfg };
    let horizon = model.horizon();
    let a = summarize(&run_paths(model, horizon, strategy, x0, i0, &plain, coarse)?, strategy.target(), &plain);
    let b = summarize(&run_paths(model, horizon, strategy, x0, i0, &plain, fine)?, strategy.target(), &plain);
    Ok(RefinementReport {
        mean_coarse: a.mean_terminal,
        mean_fine: b.mean_terminal,
        se_mean: a.se_mean,
        difference: a.mean_terminal - b.mean_terminal,
    })
}
