//! The regime chain: a homogeneous continuous-time Markov chain on
//! `{0, …, N-1}` described by its generator.
//!
//! Regimes are plain indices. Transition probabilities and marginal
//! (occupation) probabilities come from integrating the forward Kolmogorov
//! system with classical RK4 at a step of at most `1e-3` years, and sample
//! paths use exponential holding times.

use nalgebra::DMatrix;
use rand::Rng;
use rand_distr::{Distribution, Exp1};
use rayon::prelude::*;
use thiserror::Error;

use crate::ode::{rk4_step, Rk4Workspace};
use crate::stats::SampleMoments;
use crate::streams::{path_rng, StreamKind};

/// Rows may be off by this much and still get re-centered on the diagonal.
pub const ROW_SUM_TOLERANCE: f64 = 1e-9;

/// Largest RK4 step used for the forward Kolmogorov system (years).
pub const MAX_KOLMOGOROV_STEP: f64 = 1e-3;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ChainError {
    #[error("generator has no rows")]
    Empty,
    #[error("generator is not square: {rows} rows but row {row} has {len} entries")]
    NotSquare { rows: usize, row: usize, len: usize },
    #[error("generator entry ({row}, {col}) is not finite")]
    NonFinite { row: usize, col: usize },
    #[error("negative off-diagonal rate q[{row}][{col}] = {value}")]
    NegativeOffDiagonal { row: usize, col: usize, value: f64 },
    #[error("row {row} of the generator sums to {sum}, expected 0")]
    RowSumViolation { row: usize, sum: f64 },
    #[error("negative time {0}")]
    NegativeTime(f64),
    #[error("time grid must be finite, ascending and start at 0")]
    BadGrid,
    #[error("regime {regime} out of range for a chain with {n_regimes} regimes")]
    RegimeOutOfRange { regime: usize, n_regimes: usize },
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("invalid chain path: {0}")]
    InvalidPath(&'static str),
}

/// A validated generator `Q`: nonnegative off-diagonal rates, rows summing to
/// zero.
#[derive(Debug, Clone, PartialEq)]
pub struct Generator {
    q: DMatrix<f64>,
}

impl Generator {
    /// Validates a raw rate matrix given row by row.
    ///
    /// Rows whose sum is within [`ROW_SUM_TOLERANCE`] of zero have their
    /// diagonal reset to minus the sum of the off-diagonal rates.
    pub fn new(rows: &[Vec<f64>]) -> Result<Self, ChainError> {
        let n = rows.len();
        if n == 0 {
            return Err(ChainError::Empty);
        }
        for (row, r) in rows.iter().enumerate() {
            if r.len() != n {
                return Err(ChainError::NotSquare { rows: n, row, len: r.len() });
            }
        }
        let q = DMatrix::from_fn(n, n, |i, j| rows[i][j]);
        Self::from_matrix(q)
    }

    pub fn from_matrix(mut q: DMatrix<f64>) -> Result<Self, ChainError> {
        let n = q.nrows();
        if n == 0 {
            return Err(ChainError::Empty);
        }
        if q.ncols() != n {
            return Err(ChainError::NotSquare { rows: n, row: 0, len: q.ncols() });
        }
        for i in 0..n {
            for j in 0..n {
                let v = q[(i, j)];
                if !v.is_finite() {
                    return Err(ChainError::NonFinite { row: i, col: j });
                }
                if i != j && v < 0.0 {
                    return Err(ChainError::NegativeOffDiagonal { row: i, col: j, value: v });
                }
            }
        }
        for i in 0..n {
            let sum: f64 = q.row(i).iter().sum();
            if sum.abs() >= ROW_SUM_TOLERANCE {
                return Err(ChainError::RowSumViolation { row: i, sum });
            }
            let off: f64 = (0..n).filter(|&j| j != i).map(|j| q[(i, j)]).sum();
            q[(i, i)] = -off;
        }
        Ok(Self { q })
    }

    /// The single-regime chain (no switching).
    pub fn single_regime() -> Self {
        Self { q: DMatrix::zeros(1, 1) }
    }

    pub fn n_regimes(&self) -> usize {
        self.q.nrows()
    }

    pub fn rate(&self, from: usize, to: usize) -> f64 {
        self.q[(from, to)]
    }

    /// Total rate of leaving `regime`, `-q[i][i]`.
    pub fn exit_rate(&self, regime: usize) -> f64 {
        -self.q[(regime, regime)]
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.q
    }

    pub fn to_rows(&self) -> Vec<Vec<f64>> {
        (0..self.n_regimes())
            .map(|i| self.q.row(i).iter().copied().collect())
            .collect()
    }

    fn check_regime(&self, regime: usize) -> Result<(), ChainError> {
        if regime >= self.n_regimes() {
            return Err(ChainError::RegimeOutOfRange { regime, n_regimes: self.n_regimes() });
        }
        Ok(())
    }

    /// `P(t)` with entries `P(α(t) = j | α(0) = i)`, from `dP/dt = P Q`.
    pub fn transition_matrix(&self, t: f64) -> Result<DMatrix<f64>, ChainError> {
        if !(t >= 0.0) {
            return Err(ChainError::NegativeTime(t));
        }
        let n = self.n_regimes();
        let mut rows = DMatrix::identity(n, n);
        if t == 0.0 {
            return Ok(rows);
        }
        let steps = (t / MAX_KOLMOGOROV_STEP).ceil() as usize;
        let h = t / steps as f64;
        let mut ws = Rk4Workspace::new(n);
        let mut row = vec![0.0; n];
        for i in 0..n {
            row.iter_mut().enumerate().for_each(|(j, v)| *v = rows[(i, j)]);
            for _ in 0..steps {
                self.forward_step(&mut row, h, &mut ws);
            }
            for j in 0..n {
                rows[(i, j)] = row[j];
            }
        }
        Ok(rows)
    }

    /// Marginal law of the chain started in `initial` at every grid time.
    ///
    /// Returns one probability vector per grid point (`result[k][i]`).
    pub fn occupation_probabilities(
        &self,
        initial: usize,
        grid: &[f64],
    ) -> Result<Vec<Vec<f64>>, ChainError> {
        self.check_regime(initial)?;
        if grid.first() != Some(&0.0)
            || grid.iter().any(|t| !t.is_finite())
            || grid.windows(2).any(|w| w[1] < w[0])
        {
            return Err(ChainError::BadGrid);
        }
        let n = self.n_regimes();
        let mut current = vec![0.0; n];
        current[initial] = 1.0;
        let mut ws = Rk4Workspace::new(n);
        let mut out = Vec::with_capacity(grid.len());
        out.push(current.clone());
        for w in grid.windows(2) {
            let span = w[1] - w[0];
            if span > 0.0 {
                let steps = (span / MAX_KOLMOGOROV_STEP).ceil() as usize;
                let h = span / steps as f64;
                for _ in 0..steps {
                    self.forward_step(&mut current, h, &mut ws);
                }
            }
            out.push(current.clone());
        }
        Ok(out)
    }

    fn forward_step(&self, row: &mut [f64], h: f64, ws: &mut Rk4Workspace) {
        let q = &self.q;
        let n = row.len();
        rk4_step(row, h, ws, |_, y, dy| {
            for j in 0..n {
                dy[j] = (0..n).map(|k| y[k] * q[(k, j)]).sum();
            }
        });
    }

    /// Samples one path on `[0, horizon]` starting from `initial`.
    pub fn sample_path<R: Rng + ?Sized>(
        &self,
        initial: usize,
        horizon: f64,
        rng: &mut R,
    ) -> ChainPath {
        assert!(initial < self.n_regimes(), "initial regime out of range");
        assert!(horizon > 0.0, "horizon must be positive");
        let mut jump_times = Vec::new();
        let mut post_jump_regimes = Vec::new();
        let mut regime = initial;
        let mut t = 0.0;
        loop {
            let rate = self.exit_rate(regime);
            if rate <= 0.0 {
                break;
            }
            let hold: f64 = Exp1.sample(rng);
            t += hold / rate;
            if t > horizon {
                break;
            }
            let mut target = rng.random::<f64>() * rate;
            let mut next = regime;
            for j in (0..self.n_regimes()).filter(|&j| j != regime) {
                let q = self.rate(regime, j);
                if q <= 0.0 {
                    continue;
                }
                next = j;
                if target < q {
                    break;
                }
                target -= q;
            }
            jump_times.push(t);
            post_jump_regimes.push(next);
            regime = next;
        }
        ChainPath { initial_regime: initial, jump_times, post_jump_regimes, horizon }
    }
}

/// A càdlàg regime trajectory on `[0, horizon]`.
#[derive(Debug, Clone, PartialEq)]
pub struct ChainPath {
    initial_regime: usize,
    jump_times: Vec<f64>,
    post_jump_regimes: Vec<usize>,
    horizon: f64,
}

impl ChainPath {
    pub fn new(
        initial_regime: usize,
        jump_times: Vec<f64>,
        post_jump_regimes: Vec<usize>,
        horizon: f64,
    ) -> Result<Self, ChainError> {
        if jump_times.len() != post_jump_regimes.len() {
            return Err(ChainError::InvalidPath("jump times and regimes differ in length"));
        }
        if !(horizon > 0.0) {
            return Err(ChainError::InvalidPath("horizon must be positive"));
        }
        if jump_times.iter().any(|&t| !(t > 0.0 && t <= horizon))
            || jump_times.windows(2).any(|w| w[1] <= w[0])
        {
            return Err(ChainError::InvalidPath("jump times must be increasing within (0, T]"));
        }
        let mut previous = initial_regime;
        for &r in &post_jump_regimes {
            if r == previous {
                return Err(ChainError::InvalidPath("consecutive regimes must differ"));
            }
            previous = r;
        }
        Ok(Self { initial_regime, jump_times, post_jump_regimes, horizon })
    }

    pub fn initial_regime(&self) -> usize {
        self.initial_regime
    }

    pub fn jump_times(&self) -> &[f64] {
        &self.jump_times
    }

    pub fn post_jump_regimes(&self) -> &[usize] {
        &self.post_jump_regimes
    }

    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    pub fn n_jumps(&self) -> usize {
        self.jump_times.len()
    }

    /// `α(t)`, right-continuous.
    pub fn regime_at(&self, t: f64) -> usize {
        let k = self.jump_times.partition_point(|&s| s <= t);
        if k == 0 {
            self.initial_regime
        } else {
            self.post_jump_regimes[k - 1]
        }
    }

    /// `α(t-)`, the left limit.
    pub fn regime_before(&self, t: f64) -> usize {
        let k = self.jump_times.partition_point(|&s| s < t);
        if k == 0 {
            self.initial_regime
        } else {
            self.post_jump_regimes[k - 1]
        }
    }

    /// Maximal intervals `(start, end, regime)` of constant regime covering
    /// `[0, horizon]`.
    pub fn segments(&self) -> impl Iterator<Item = (f64, f64, usize)> + '_ {
        let starts = std::iter::once(0.0).chain(self.jump_times.iter().copied());
        let ends = self.jump_times.iter().copied().chain(std::iter::once(self.horizon));
        let regimes =
            std::iter::once(self.initial_regime).chain(self.post_jump_regimes.iter().copied());
        starts
            .zip(ends)
            .zip(regimes)
            .map(|((a, b), r)| (a, b, r))
            .filter(|(a, b, _)| b > a)
    }
}

/// Jump counts into each regime and their compensators along one path.
#[derive(Debug, Clone, PartialEq)]
pub struct CountingRecord {
    horizon: f64,
    /// Times of the jumps into regime `j`, ascending.
    arrivals: Vec<Vec<f64>>,
    /// Compensator of regime `j` as knots `(t, ∫₀ᵗ λ_j)` of a piecewise-linear
    /// function, from `(0, 0)` to `(T, total)`.
    compensator_knots: Vec<Vec<(f64, f64)>>,
}

impl CountingRecord {
    pub fn n_regimes(&self) -> usize {
        self.arrivals.len()
    }

    /// `Φ_j(t)`.
    pub fn count(&self, regime: usize, t: f64) -> usize {
        self.arrivals[regime].partition_point(|&s| s <= t)
    }

    /// `∫₀ᵗ λ_j(s) ds`.
    pub fn compensator(&self, regime: usize, t: f64) -> f64 {
        let knots = &self.compensator_knots[regime];
        let k = knots.partition_point(|&(s, _)| s <= t);
        if k == 0 {
            return 0.0;
        }
        if k == knots.len() {
            return knots[k - 1].1;
        }
        let (t0, v0) = knots[k - 1];
        let (t1, v1) = knots[k];
        v0 + (v1 - v0) * (t - t0) / (t1 - t0)
    }

    /// `Φ̃_j(t) = Φ_j(t) - ∫₀ᵗ λ_j`.
    pub fn martingale(&self, regime: usize, t: f64) -> f64 {
        self.count(regime, t) as f64 - self.compensator(regime, t)
    }

    pub fn total_jumps(&self) -> usize {
        self.arrivals.iter().map(Vec::len).sum()
    }

    pub fn horizon(&self) -> f64 {
        self.horizon
    }
}

/// Builds `Φ_j` and `∫λ_j` for a path, with `λ_j(t) = q[α(t-)][j]` off the
/// current regime and `0` on it.
pub fn counting_processes(
    path: &ChainPath,
    generator: &Generator,
) -> Result<CountingRecord, ChainError> {
    let n = generator.n_regimes();
    let max_regime = std::iter::once(path.initial_regime)
        .chain(path.post_jump_regimes.iter().copied())
        .max()
        .unwrap_or(0);
    if max_regime >= n {
        return Err(ChainError::DimensionMismatch { expected: n, found: max_regime + 1 });
    }
    let mut arrivals = vec![Vec::new(); n];
    for (&t, &r) in path.jump_times.iter().zip(&path.post_jump_regimes) {
        arrivals[r].push(t);
    }
    let mut compensator_knots = vec![vec![(0.0, 0.0)]; n];
    for (a, b, regime) in path.segments() {
        for (j, knots) in compensator_knots.iter_mut().enumerate() {
            let slope = if j == regime { 0.0 } else { generator.rate(regime, j) };
            let last = knots.last().expect("knots start non-empty").1;
            knots.push((b, last + slope * (b - a)));
        }
    }
    Ok(CountingRecord { horizon: path.horizon, arrivals, compensator_knots })
}

/// Monte Carlo comparison of `E[Φ_j(T)]` with `E[∫₀ᵀ λ_j]` for one target
/// regime.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CompensatorCheck {
    pub regime: usize,
    pub mean_count: f64,
    pub mean_compensator: f64,
    /// Standard error of the per-path difference `Φ_j(T) - ∫₀ᵀ λ_j`.
    pub se_difference: f64,
}

impl CompensatorCheck {
    pub fn z_score(&self) -> f64 {
        let d = self.mean_count - self.mean_compensator;
        if self.se_difference > 0.0 {
            d / self.se_difference
        } else if d == 0.0 {
            0.0
        } else {
            f64::INFINITY
        }
    }
}

/// Samples `n_paths` chain paths and checks the compensator identity for
/// every target regime.
pub fn compensator_statistics(
    generator: &Generator,
    initial: usize,
    horizon: f64,
    n_paths: usize,
    base_seed: u64,
) -> Result<Vec<CompensatorCheck>, ChainError> {
    generator.check_regime(initial)?;
    let n = generator.n_regimes();
    let per_path: Vec<Vec<(f64, f64)>> = (0..n_paths as u64)
        .into_par_iter()
        .map(|p| {
            let mut rng = path_rng(base_seed, p, StreamKind::Chain);
            let path = generator.sample_path(initial, horizon, &mut rng);
            let rec = counting_processes(&path, generator).expect("sampled path fits generator");
            (0..n)
                .map(|j| (rec.count(j, horizon) as f64, rec.compensator(j, horizon)))
                .collect()
        })
        .collect();
    Ok((0..n)
        .map(|j| {
            let counts: Vec<f64> = per_path.iter().map(|v| v[j].0).collect();
            let comps: Vec<f64> = per_path.iter().map(|v| v[j].1).collect();
            let diffs: Vec<f64> = per_path.iter().map(|v| v[j].0 - v[j].1).collect();
            CompensatorCheck {
                regime: j,
                mean_count: SampleMoments::from_samples(&counts).mean,
                mean_compensator: SampleMoments::from_samples(&comps).mean,
                se_difference: SampleMoments::from_samples(&diffs).se_mean,
            }
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::streams::path_rng;

    fn symmetric() -> Generator {
        Generator::new(&[vec![-1.0, 1.0], vec![1.0, -1.0]]).unwrap()
    }

    /// Closed form for the symmetric two-state chain via its eigendecomposition.
    fn symmetric_p11(rate: f64, t: f64) -> f64 {
        0.5 * (1.0 + (-2.0 * rate * t).exp())
    }

    #[test]
    fn validates_examples() {
        assert_eq!(symmetric().n_regimes(), 2);
        let zero = Generator::new(&[vec![0.0, 0.0], vec![0.0, 0.0]]).unwrap();
        assert_eq!(zero.exit_rate(0), 0.0);
        assert!(matches!(
            Generator::new(&[vec![-1.0, 2.0], vec![1.0, -1.0]]),
            Err(ChainError::RowSumViolation { row: 0, .. })
        ));
        assert!(matches!(
            Generator::new(&[vec![1.0, -1.0], vec![1.0, -1.0]]),
            Err(ChainError::NegativeOffDiagonal { row: 0, col: 1, .. })
        ));
        assert!(matches!(
            Generator::new(&[vec![-1.0, 1.0], vec![1.0]]),
            Err(ChainError::NotSquare { .. })
        ));
        assert!(matches!(
            Generator::new(&[vec![f64::NAN]]),
            Err(ChainError::NonFinite { .. })
        ));
        assert_eq!(Generator::new(&[]), Err(ChainError::Empty));
    }

    #[test]
    fn rounded_rows_are_recentered() {
        let g = Generator::new(&[vec![-0.3333333333, 0.3333333333333], vec![0.5, -0.5]]).unwrap();
        for i in 0..2 {
            let s: f64 = g.matrix().row(i).iter().sum();
            assert!(s.abs() <= 1e-12);
        }
        assert!(g.rate(0, 0) <= 0.0);
    }

    #[test]
    fn transition_matrix_examples() {
        let g = symmetric();
        assert_eq!(g.transition_matrix(0.0).unwrap(), DMatrix::identity(2, 2));
        let zero = Generator::new(&[vec![0.0, 0.0], vec![0.0, 0.0]]).unwrap();
        let p = zero.transition_matrix(5.0).unwrap();
        assert!((p - DMatrix::<f64>::identity(2, 2)).amax() < 1e-15);
        let p = g.transition_matrix(1.0).unwrap();
        assert!((p[(0, 0)] - symmetric_p11(1.0, 1.0)).abs() < 1e-12);
        assert!((p[(0, 0)] - 0.567668).abs() < 1e-6);
        assert!(matches!(g.transition_matrix(-1.0), Err(ChainError::NegativeTime(_))));
    }

    #[test]
    fn chapman_kolmogorov() {
        let g = Generator::new(&[
            vec![-2.0, 1.5, 0.5],
            vec![0.3, -0.4, 0.1],
            vec![1.0, 2.0, -3.0],
        ])
        .unwrap();
        for &t in &[0.1, 0.5, 1.0] {
            for &s in &[0.1, 0.5, 1.0] {
                let lhs = g.transition_matrix(t + s).unwrap();
                let rhs = g.transition_matrix(t).unwrap() * g.transition_matrix(s).unwrap();
                assert!((lhs - rhs).amax() < 1e-8);
            }
        }
    }

    #[test]
    fn occupation_examples() {
        let g = symmetric();
        let grid = [0.0, 0.5, 1.0, 10.0];
        let pi = g.occupation_probabilities(0, &grid).unwrap();
        assert_eq!(pi[0], vec![1.0, 0.0]);
        assert!((pi[2][0] - 0.567668).abs() < 1e-6);
        assert!((pi[2][1] - 0.432332).abs() < 1e-6);
        assert!((pi[3][0] - 0.5).abs() < 1e-6);
        let p = g.transition_matrix(1.0).unwrap();
        assert!((pi[2][0] - p[(0, 0)]).abs() < 1e-10);

        let zero = Generator::new(&[vec![0.0, 0.0], vec![0.0, 0.0]]).unwrap();
        let pi = zero.occupation_probabilities(1, &grid).unwrap();
        assert!(pi.iter().all(|v| v == &vec![0.0, 1.0]));

        assert_eq!(g.occupation_probabilities(0, &[0.5, 1.0]), Err(ChainError::BadGrid));
        assert_eq!(g.occupation_probabilities(0, &[0.0, 1.0, 0.5]), Err(ChainError::BadGrid));
        assert!(g.occupation_probabilities(2, &grid).is_err());
    }

    #[test]
    fn zero_generator_paths_have_no_jumps() {
        let zero = Generator::new(&[vec![0.0, 0.0], vec![0.0, 0.0]]).unwrap();
        let mut rng = path_rng(1, 0, StreamKind::Chain);
        let path = zero.sample_path(0, 3.0, &mut rng);
        assert_eq!(path.n_jumps(), 0);
        let rec = counting_processes(&path, &zero).unwrap();
        assert_eq!(rec.count(1, 3.0), 0);
        assert_eq!(rec.compensator(1, 3.0), 0.0);
    }

    #[test]
    fn path_statistics_match_exponential_and_marginals() {
        let g = symmetric();
        let n = 100_000;
        let mut first = Vec::with_capacity(n);
        let mut in_first = Vec::with_capacity(n);
        for p in 0..n as u64 {
            let mut rng = path_rng(11, p, StreamKind::Chain);
            let path = g.sample_path(0, 50.0, &mut rng);
            first.push(path.jump_times().first().copied().unwrap_or(50.0));
            in_first.push(if path.regime_at(1.0) == 0 { 1.0 } else { 0.0 });
        }
        let m = SampleMoments::from_samples(&first);
        assert!((m.mean - 1.0).abs() <= 3.0 * m.se_mean, "{m:?}");
        let m = SampleMoments::from_samples(&in_first);
        let exact = symmetric_p11(1.0, 1.0);
        assert!((m.mean - exact).abs() <= 3.0 * m.se_mean, "{m:?}");
    }

    #[test]
    fn counting_single_jump_by_hand() {
        let g = symmetric();
        let path = ChainPath::new(0, vec![0.3], vec![1], 1.0).unwrap();
        let rec = counting_processes(&path, &g).unwrap();
        assert_eq!(rec.count(1, 1.0), 1);
        assert_eq!(rec.count(1, 0.29), 0);
        assert_eq!(rec.count(0, 1.0), 0);
        assert!((rec.compensator(1, 1.0) - 0.3).abs() < 1e-15);
        assert!((rec.compensator(0, 1.0) - 0.7).abs() < 1e-15);
        assert!((rec.compensator(1, 0.15) - 0.15).abs() < 1e-15);
        assert_eq!(rec.total_jumps(), path.n_jumps());
        assert_eq!(path.regime_before(0.3), 0);
        assert_eq!(path.regime_at(0.3), 1);
    }

    #[test]
    fn counting_rejects_foreign_path() {
        let path = ChainPath::new(0, vec![0.3], vec![2], 1.0).unwrap();
        assert!(matches!(
            counting_processes(&path, &symmetric()),
            Err(ChainError::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn invalid_paths_are_rejected() {
        assert!(ChainPath::new(0, vec![0.3], vec![0], 1.0).is_err());
        assert!(ChainPath::new(0, vec![0.5, 0.3], vec![1, 0], 1.0).is_err());
        assert!(ChainPath::new(0, vec![1.5], vec![1], 1.0).is_err());
    }

    #[test]
    fn compensator_identity_holds_in_mean() {
        let g = Generator::new(&[vec![-1.0, 0.6, 0.4], vec![2.0, -2.0, 0.0], vec![0.5, 0.5, -1.0]])
            .unwrap();
        let checks = compensator_statistics(&g, 0, 1.0, 100_000, 5).unwrap();
        for c in checks {
            assert!(c.z_score().abs() <= 3.0, "{c:?}");
        }
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        fn generator_strategy() -> impl Strategy<Value = Generator> {
            (2usize..=4).prop_flat_map(|n| {
                proptest::collection::vec(0.0f64..5.0, n * n).prop_map(move |v| {
                    let mut q = DMatrix::from_row_slice(n, n, &v);
                    for i in 0..n {
                        q[(i, i)] = 0.0;
                        let s: f64 = q.row(i).iter().sum();
                        q[(i, i)] = -s;
                    }
                    Generator::from_matrix(q).unwrap()
                })
            })
        }

        proptest! {
            #![proptest_config(ProptestConfig::with_cases(32))]

            #[test]
            fn transition_rows_are_distributions(g in generator_strategy(), t in 0.0f64..3.0) {
                let p = g.transition_matrix(t).unwrap();
                for i in 0..g.n_regimes() {
                    let s: f64 = p.row(i).iter().sum();
                    prop_assert!((s - 1.0).abs() < 1e-10);
                    prop_assert!(p.row(i).iter().all(|&v| v >= -1e-12));
                }
            }

            #[test]
            fn counts_are_consistent(g in generator_strategy(), seed in 0u64..1000) {
                let mut rng = path_rng(seed, 0, StreamKind::Chain);
                let path = g.sample_path(0, 2.0, &mut rng);
                let rec = counting_processes(&path, &g).unwrap();
                prop_assert_eq!(rec.total_jumps(), path.n_jumps());
                let total: usize = (0..g.n_regimes()).map(|j| rec.count(j, 2.0)).sum();
                prop_assert_eq!(total, path.n_jumps());
                for w in path.post_jump_regimes().windows(2) {
                    prop_assert_ne!(w[0], w[1]);
                }
            }
        }
    }
}
