use proptest::prelude::*;
use regime_frontier::bsde::{solve_p_unforced, TimeGrid};
use regime_frontier::{build_market, EfficientFrontier, Generator, HorizonSpec, Model, SegmentSpec};

#[derive(Debug, Clone)]
struct Regime {
    r: f64,
    premium: f64,
    sigma: f64,
}

fn regime() -> impl Strategy<Value = Regime> {
    (0.005f64..0.15, -0.3f64..0.4, 0.1f64..0.6).prop_map(|(r, premium, sigma)| Regime { r, premium, sigma })
}

fn model(regimes: &[Regime], rate: f64, f: f64) -> Model {
    let specs: Vec<Vec<SegmentSpec>> = regimes
        .iter()
        .map(|g| vec![SegmentSpec { t_start: 0.0, r: g.r, mu: vec![g.r + g.premium], sigma: vec![vec![g.sigma]] }])
        .collect();
    let market = build_market(&specs, 1.0, 1e-10).unwrap();
    let n = regimes.len();
    let rows: Vec<Vec<f64>> = (0..n)
        .map(|i| (0..n).map(|j| if i == j { -rate * (n - 1) as f64 } else { rate }).collect())
        .collect();
    Model::new(Generator::new(&rows).unwrap(), market, HorizonSpec::constant(f, 1.0, 0.05).unwrap()).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn solutions_respect_their_bounds(
        regimes in proptest::collection::vec(regime(), 1..4),
        rate in 0.0f64..5.0,
        f in 0.0f64..0.9,
    ) {
        prop_assume!(regimes.iter().any(|g| g.premium.abs() > 0.01));
        let m = model(&regimes, rate, f);
        let frontier = EfficientFrontier::build(&m, 1e-3, 1.0, 0).unwrap();
        let sol = frontier.solution();
        prop_assert!(sol.p.min() > 0.0);
        prop_assert!(sol.psi.min() > 0.0);
        prop_assert!(sol.g.min() > 0.0 && sol.g.max() <= 1.0 + 1e-10);
        for i in 0..m.n_regimes() {
            prop_assert!(sol.g.regime(i)[..sol.grid.n_steps()].iter().all(|&g| g < 1.0));
        }
        prop_assert!(frontier.delta().delta >= 0.0);
        prop_assert!(frontier.inputs().condition_holds());
        prop_assert!(frontier.gamma() > 0.0);

        let grid = TimeGrid::uniform(1.0, 1e-3).unwrap();
        let bar = solve_p_unforced(&m, &grid).unwrap();
        for i in 0..m.n_regimes() {
            prop_assert!(sol.p.regime(i).iter().zip(bar.regime(i)).all(|(p, b)| p >= b));
        }
    }

    #[test]
    fn frontier_is_a_convex_curve_above_its_vertex(
        regimes in proptest::collection::vec(regime(), 1..3),
        rate in 0.0f64..3.0,
        f in 0.0f64..0.9,
        offsets in proptest::collection::vec(0.0f64..1.0, 3),
    ) {
        prop_assume!(regimes.iter().any(|g| g.premium.abs() > 0.01));
        let frontier = EfficientFrontier::build(&model(&regimes, rate, f), 1e-3, 1.0, 0).unwrap();
        let vertex = frontier.min_variance();
        let mut targets: Vec<f64> = offsets.iter().map(|d| vertex.z + d).collect();
        targets.sort_by(f64::total_cmp);
        let curve = frontier.curve(&targets).unwrap();
        prop_assert!(curve.iter().all(|p| p.variance >= vertex.variance - 1e-12));
        prop_assert!(curve.windows(2).all(|w| w[1].variance >= w[0].variance - 1e-12));
        prop_assert!(curve.windows(2).all(|w| w[1].lambda_star <= w[0].lambda_star));
    }
}
