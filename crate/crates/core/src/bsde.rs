//! Backward equations of the mean-variance problem, reduced to coupled
//! per-regime ODE systems.
//!
//! With coefficients that depend only on time and the current regime and a
//! deterministic exit density, each of the three backward equations has a
//! solution of the form `y(t) = Y(t, α(t))`: the Brownian integrand
//! vanishes and the jump integrand into regime `j` is `Y_j(t) - Y_i(t)`.
//! Substituting that ansatz leaves `N` coupled linear (or, for `G`,
//! `P`-weighted) ODEs per equation, integrated backward from `T` with
//! classical RK4 on a uniform grid:
//!
//! * feasibility `Ψ`:  `Ψ_i' = -(r_i Ψ_i + f) - Σ_j q_ij Ψ_j`, `Ψ_i(T) = 1 - F(T)`
//! * Riccati `P`:      `P_i' = -(2f + (2r_i - |θ_i|²) P_i) - Σ_j q_ij P_j`, `P_i(T) = 2(1 - F(T))`
//! * auxiliary `G`:    `G_i' = (r_i + 2f/P_i) G_i - 2f/P_i
//!                      - (1/P_i) Σ_{j≠i} q_ij (P_j - P_i)(G_j - G_i) - Σ_j q_ij G_j`, `G_i(T) = 1`
//!
//! Coefficients are frozen at each step's midpoint, so schedules whose
//! breakpoints fall on grid nodes are integrated without loss of order.

use thiserror::Error;

use crate::chain::{ChainError, Generator};
use crate::horizon::HorizonSpec;
use crate::model::Model;
use crate::ode::{rk4_step, Rk4Workspace};

/// Default grid step as a fraction of the horizon.
pub const DEFAULT_STEP_FRACTION: f64 = 1e-4;

/// Slack allowed on the upper bound `G ≤ 1`.
pub const G_UPPER_SLACK: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum BsdeError {
    #[error("grid step must be positive and at most the horizon, got {0}")]
    InvalidStep(f64),
    #[error("feasibility solution lost positivity at t = {time} (regime {regime}); reduce the step")]
    StepTooLarge { time: f64, regime: usize },
    #[error("Riccati solution is not positive at t = {time} (regime {regime})")]
    PositivityLost { time: f64, regime: usize },
    #[error("auxiliary solution {value} left (0, 1] at t = {time} (regime {regime})")]
    BoundViolated { time: f64, regime: usize, value: f64 },
    #[error("arrays are not on a common grid")]
    GridMismatch,
    #[error(transparent)]
    Chain(#[from] ChainError),
}

/// Uniform grid `0 = t_0 < … < t_n = T`.
#[derive(Debug, Clone, PartialEq)]
pub struct TimeGrid {
    times: Vec<f64>,
    step: f64,
}

impl TimeGrid {
    /// The finest uniform grid whose step does not exceed `max_step`.
    pub fn uniform(horizon: f64, max_step: f64) -> Result<Self, BsdeError> {
        if !(max_step > 0.0) || !max_step.is_finite() || max_step > horizon {
            return Err(BsdeError::InvalidStep(max_step));
        }
        let n = ((horizon / max_step) - 1e-9).ceil().max(1.0) as usize;
        let times = (0..=n).map(|k| horizon * k as f64 / n as f64).collect();
        Ok(Self { times, step: horizon / n as f64 })
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn step(&self) -> f64 {
        self.step
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn horizon(&self) -> f64 {
        *self.times.last().expect("grid has at least two nodes")
    }

    pub fn n_steps(&self) -> usize {
        self.times.len() - 1
    }

    /// Interval index `k` and weight `w` with `t = (1-w) t_k + w t_{k+1}`.
    #[inline]
    pub fn locate(&self, t: f64) -> (usize, f64) {
        let n = self.n_steps();
        let k = ((t / self.step).floor().max(0.0) as usize).min(n - 1);
        let w = ((t - self.times[k]) / self.step).clamp(0.0, 1.0);
        (k, w)
    }
}

/// Solution values per regime on a grid: `values[regime][k]`.
#[derive(Debug, Clone, PartialEq)]
pub struct RegimeCurves {
    values: Vec<Vec<f64>>,
}

impl RegimeCurves {
    pub fn from_values(values: Vec<Vec<f64>>) -> Self {
        Self { values }
    }

    pub fn n_regimes(&self) -> usize {
        self.values.len()
    }

    pub fn len(&self) -> usize {
        self.values.first().map_or(0, Vec::len)
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn regime(&self, regime: usize) -> &[f64] {
        &self.values[regime]
    }

    #[inline]
    pub fn at(&self, regime: usize, k: usize) -> f64 {
        self.values[regime][k]
    }

    /// Value at time 0.
    pub fn initial(&self, regime: usize) -> f64 {
        self.values[regime][0]
    }

    /// Linear interpolation between grid nodes.
    #[inline]
    pub fn interpolate(&self, grid: &TimeGrid, regime: usize, t: f64) -> f64 {
        let (k, w) = grid.locate(t);
        let v = &self.values[regime];
        v[k] + w * (v[k + 1] - v[k])
    }

    pub fn min(&self) -> f64 {
        self.values.iter().flatten().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max(&self) -> f64 {
        self.values.iter().flatten().copied().fold(f64::NEG_INFINITY, f64::max)
    }
}

/// `Ψ`, `P` and `G` on one shared grid.
#[derive(Debug, Clone, PartialEq)]
pub struct BackwardSolution {
    pub grid: TimeGrid,
    pub psi: RegimeCurves,
    pub p: RegimeCurves,
    pub g: RegimeCurves,
    /// Smallest value of `P` on the grid.
    pub lower_bound_b: f64,
    /// Largest value of `P` on the grid.
    pub upper_bound_b: f64,
}

impl BackwardSolution {
    /// Jump integrand of `P` for a jump from `from` to `to` at grid node `k`.
    pub fn p_jump(&self, from: usize, to: usize, k: usize) -> f64 {
        self.p.at(to, k) - self.p.at(from, k)
    }

    /// Jump integrand of `G` for a jump from `from` to `to` at grid node `k`.
    pub fn g_jump(&self, from: usize, to: usize, k: usize) -> f64 {
        self.g.at(to, k) - self.g.at(from, k)
    }

    /// Jump integrand of `Ψ` for a jump from `from` to `to` at grid node `k`.
    pub fn psi_jump(&self, from: usize, to: usize, k: usize) -> f64 {
        self.psi.at(to, k) - self.psi.at(from, k)
    }
}

/// Solves all three equations on a grid with step at most `max_step`.
pub fn solve(model: &Model, max_step: f64) -> Result<BackwardSolution, BsdeError> {
    let grid = TimeGrid::uniform(model.terminal_time(), max_step)?;
    let psi = solve_psi(model, &grid)?;
    let p = solve_p(model, &grid)?;
    let g = solve_g(model, &grid, &p)?;
    Ok(BackwardSolution {
        lower_bound_b: p.min(),
        upper_bound_b: p.max(),
        grid,
        psi,
        p,
        g,
    })
}

/// Coefficients frozen over one grid interval.
struct IntervalCoefficients {
    f: f64,
    r: Vec<f64>,
    theta_sq: Vec<f64>,
}

fn interval_coefficients(model: &Model, grid: &TimeGrid, k: usize, out: &mut IntervalCoefficients) {
    let times = grid.times();
    let mid = 0.5 * (times[k] + times[k + 1]);
    out.f = model.horizon().density_at(mid);
    for i in 0..model.n_regimes() {
        let c = model.market().segment_at(mid, i);
        out.r[i] = c.r;
        out.theta_sq[i] = c.theta_sq;
    }
}

/// `Σ_j q_ij y_j`.
#[inline]
fn coupling(q: &Generator, i: usize, y: &[f64]) -> f64 {
    (0..y.len()).map(|j| q.rate(i, j) * y[j]).sum()
}

/// Integrates `y' = rhs(y)` backward from `terminal`, checking each node.
fn integrate_backward<R, C>(
    model: &Model,
    grid: &TimeGrid,
    terminal: f64,
    mut rhs: R,
    mut check: C,
) -> Result<RegimeCurves, BsdeError>
where
    R: FnMut(&IntervalCoefficients, usize, usize, &[f64], &mut [f64]),
    C: FnMut(f64, usize, f64) -> Result<(), BsdeError>,
{
    let n = model.n_regimes();
    let steps = grid.n_steps();
    let mut values = vec![vec![0.0; steps + 1]; n];
    let mut y = vec![terminal; n];
    for (i, v) in values.iter_mut().enumerate() {
        v[steps] = y[i];
    }
    let mut ws = Rk4Workspace::new(n);
    let mut coeffs =
        IntervalCoefficients { f: 0.0, r: vec![0.0; n], theta_sq: vec![0.0; n] };
    for k in (0..steps).rev() {
        interval_coefficients(model, grid, k, &mut coeffs);
        rk4_step(&mut y, -grid.step(), &mut ws, |stage, y, dy| rhs(&coeffs, k, stage, y, dy));
        for i in 0..n {
            check(grid.times()[k], i, y[i])?;
            values[i][k] = y[i];
        }
    }
    Ok(RegimeCurves { values })
}

/// Feasibility equation `Ψ`.
pub fn solve_psi(model: &Model, grid: &TimeGrid) -> Result<RegimeCurves, BsdeError> {
    let q = model.generator();
    let terminal = model.horizon().survival();
    integrate_backward(
        model,
        grid,
        terminal,
        |c, _, _, y, dy| {
            for i in 0..y.len() {
                dy[i] = -(c.r[i] * y[i] + c.f) - coupling(q, i, y);
            }
        },
        |time, regime, v| {
            if v > 0.0 {
                Ok(())
            } else {
                Err(BsdeError::StepTooLarge { time, regime })
            }
        },
    )
}

fn p_rhs(q: &Generator, c: &IntervalCoefficients, forcing: f64, y: &[f64], dy: &mut [f64]) {
    for i in 0..y.len() {
        dy[i] = -(forcing * c.f + (2.0 * c.r[i] - c.theta_sq[i]) * y[i]) - coupling(q, i, y);
    }
}

fn positive_p(time: f64, regime: usize, v: f64) -> Result<(), BsdeError> {
    if v > 0.0 {
        Ok(())
    } else {
        Err(BsdeError::PositivityLost { time, regime })
    }
}

/// Riccati equation `P`.
pub fn solve_p(model: &Model, grid: &TimeGrid) -> Result<RegimeCurves, BsdeError> {
    let q = model.generator();
    let terminal = 2.0 * model.horizon().survival();
    integrate_backward(model, grid, terminal, |c, _, _, y, dy| p_rhs(q, c, 2.0, y, dy), positive_p)
}

/// The Riccati equation with the exit-density forcing `2f` removed but the
/// same terminal value `2(1 - F(T))`. Its solution is a pointwise lower
/// bound for [`solve_p`] whenever `f ≥ 0`.
pub fn solve_p_unforced(model: &Model, grid: &TimeGrid) -> Result<RegimeCurves, BsdeError> {
    let q = model.generator();
    let terminal = 2.0 * model.horizon().survival();
    integrate_backward(model, grid, terminal, |c, _, _, y, dy| p_rhs(q, c, 0.0, y, dy), positive_p)
}

/// Auxiliary equation `G`, given `P` on the same grid.
///
/// RK4 needs `P` at interval midpoints; it is reconstructed by cubic Hermite
/// interpolation using the Riccati right-hand side for the slopes, which
/// keeps the scheme fourth order.
pub fn solve_g(model: &Model, grid: &TimeGrid, p: &RegimeCurves) -> Result<RegimeCurves, BsdeError> {
    let n = model.n_regimes();
    if p.n_regimes() != n || p.len() != grid.len() {
        return Err(BsdeError::GridMismatch);
    }
    if let Some((regime, k)) =
        (0..n).flat_map(|i| (0..p.len()).map(move |k| (i, k))).find(|&(i, k)| !(p.at(i, k) > 0.0))
    {
        return Err(BsdeError::PositivityLost { time: grid.times()[k], regime });
    }
    let q = model.generator();
    let h = grid.step();
    // P at stages 0 (t_{k+1}), 1-2 (midpoint), 3 (t_k) of the current step.
    let mut stage_p = vec![vec![0.0; n]; 3];
    let mut slope_lo = vec![0.0; n];
    let mut slope_hi = vec![0.0; n];
    let mut lo = vec![0.0; n];
    let mut hi = vec![0.0; n];
    let mut current_step = usize::MAX;
    integrate_backward(
        model,
        grid,
        1.0,
        |c, k, stage, y, dy| {
            if k != current_step {
                current_step = k;
                for i in 0..n {
                    lo[i] = p.at(i, k);
                    hi[i] = p.at(i, k + 1);
                }
                p_rhs(q, c, 2.0, &lo, &mut slope_lo);
                p_rhs(q, c, 2.0, &hi, &mut slope_hi);
                for i in 0..n {
                    stage_p[0][i] = hi[i];
                    stage_p[1][i] = 0.5 * (lo[i] + hi[i]) + h / 8.0 * (slope_lo[i] - slope_hi[i]);
                    stage_p[2][i] = lo[i];
                }
            }
            let pk = match stage {
                0 => &stage_p[0],
                1 | 2 => &stage_p[1],
                _ => &stage_p[2],
            };
            for i in 0..n {
                let pi = pk[i];
                let mut cross = 0.0;
                for j in (0..n).filter(|&j| j != i) {
                    cross += q.rate(i, j) * (pk[j] - pi) * (y[j] - y[i]);
                }
                dy[i] = (c.r[i] + 2.0 * c.f / pi) * y[i] - 2.0 * c.f / pi - cross / pi
                    - coupling(q, i, y);
            }
        },
        |time, regime, v| {
            if v > 0.0 && v <= 1.0 + G_UPPER_SLACK {
                Ok(())
            } else {
                Err(BsdeError::BoundViolated { time, regime, value: v })
            }
        },
    )
}

/// The nonnegative correction `Δ` and its two contributions.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct DeltaValue {
    pub delta: f64,
    /// `E ∫ f (G - 1)²`: exit-timing risk.
    pub f_part: f64,
    /// `E ∫ ½ Σ_j λ_j P_j (G_j - G_α)²`: regime-switching risk.
    pub jump_part: f64,
}

/// `Δ` by trapezoidal quadrature against the occupation probabilities
/// `occupation[k][i]` on the solution grid.
///
/// A jump from `i` to `j` re-weights the squared jump of `G` by the
/// post-jump Riccati value `P_j`, the value the quadratic form carries after
/// the switch.
pub fn compute_delta(
    grid: &TimeGrid,
    p: &RegimeCurves,
    g: &RegimeCurves,
    horizon: &HorizonSpec,
    occupation: &[Vec<f64>],
    generator: &Generator,
) -> Result<DeltaValue, BsdeError> {
    let n = generator.n_regimes();
    let len = grid.len();
    if p.n_regimes() != n
        || g.n_regimes() != n
        || p.len() != len
        || g.len() != len
        || occupation.len() != len
        || occupation.iter().any(|row| row.len() != n)
    {
        return Err(BsdeError::GridMismatch);
    }
    let times = grid.times();
    // f is piecewise constant; use the value of the adjoining interval at each
    // node so a density jump on a node does not leak into the next interval.
    let integrand = |k: usize, f: f64| -> (f64, f64) {
        let mut f_term = 0.0;
        let mut jump_term = 0.0;
        for i in 0..n {
            let gi = g.at(i, k);
            f_term += occupation[k][i] * f * (gi - 1.0).powi(2);
            let mut s = 0.0;
            for j in (0..n).filter(|&j| j != i) {
                s += generator.rate(i, j) * p.at(j, k) * (g.at(j, k) - gi).powi(2);
            }
            jump_term += occupation[k][i] * 0.5 * s;
        }
        (f_term, jump_term)
    };
    let mut f_part = 0.0;
    let mut jump_part = 0.0;
    for k in 0..len - 1 {
        let dt = times[k + 1] - times[k];
        let f = horizon.density_at(0.5 * (times[k] + times[k + 1]));
        let (fa, ja) = integrand(k, f);
        let (fb, jb) = integrand(k + 1, f);
        f_part += 0.5 * dt * (fa + fb);
        jump_part += 0.5 * dt * (ja + jb);
    }
    Ok(DeltaValue { delta: f_part + jump_part, f_part, jump_part })
}
