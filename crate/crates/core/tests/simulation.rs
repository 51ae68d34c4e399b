mod common;

use common::{config_path, mc, reference_model};
use regime_frontier::montecarlo::{dual_cost_check, simulate_with_exit_law, AllBond, SimError};
use regime_frontier::{simulate, EfficientFrontier, ModelConfig, SimConfig, Strategy};

#[test]
fn optimal_law_without_exit_hits_the_classical_frontier() {
    let frontier = EfficientFrontier::build(&reference_model(0.0), 1e-4, 1.0, 0).unwrap();
    let law = frontier.law(1.2).unwrap();
    let r = simulate(frontier.model(), &law, 1.0, 0, &mc(100_000, 101)).unwrap();
    let expected = (1.2 - 0.1f64.exp()).powi(2) / (0.16f64.exp() - 1.0);
    assert!((expected - 0.051828).abs() < 2e-6);
    assert!(r.mean_z_score(1.2).abs() <= 3.0, "mean {} se {}", r.mean_terminal, r.se_mean);
    assert!(r.var_z_score(expected).abs() <= 3.0, "var {} se {}", r.var_terminal, r.se_var);
    assert_eq!(r.j_mv_sampled, r.j_mv_weighted);
    assert_eq!(dual_cost_check(&r).difference, 0.0);
}

#[test]
fn feasible_portfolio_meets_its_target() {
    let frontier = EfficientFrontier::build(&reference_model(0.5), 1e-4, 1.0, 0).unwrap();
    let portfolio = frontier.feasible_portfolio(1.3).unwrap();
    let r = simulate(frontier.model(), &portfolio, 1.0, 0, &mc(100_000, 102)).unwrap();
    let z = (r.j1_weighted - 1.3) / r.se_j1_weighted;
    assert!(z.abs() <= 3.0, "J1 {} se {}", r.j1_weighted, r.se_j1_weighted);
}

#[test]
fn antithetic_pairs_shrink_the_mean_error() {
    let frontier = EfficientFrontier::build(&reference_model(0.0), 1e-4, 1.0, 0).unwrap();
    let law = frontier.law(1.2).unwrap();
    let plain = SimConfig { n_paths: 20_000, euler_step: 1e-2, ..mc(0, 103) };
    let paired = SimConfig { antithetic: true, ..plain };
    let a = simulate(frontier.model(), &law, 1.0, 0, &plain).unwrap();
    let b = simulate(frontier.model(), &law, 1.0, 0, &paired).unwrap();
    assert!(a.se_mean > 1.2 * b.se_mean, "plain {} antithetic {}", a.se_mean, b.se_mean);
}

#[test]
fn results_do_not_depend_on_thread_count() {
    let built = ModelConfig::from_path(&config_path("two-regime.json")).unwrap().build().unwrap();
    let frontier = EfficientFrontier::build(&built.model, 1e-3, built.x0, built.i0).unwrap();
    let law = frontier.law(1.15).unwrap();
    let cfg = SimConfig { n_paths: 3000, euler_step: 1e-2, record_paths: true, ..mc(0, 104) };
    let many = simulate(&built.model, &law, built.x0, built.i0, &cfg).unwrap();
    let one = rayon::ThreadPoolBuilder::new()
        .num_threads(1)
        .build()
        .unwrap()
        .install(|| simulate(&built.model, &law, built.x0, built.i0, &cfg).unwrap());
    assert_eq!(many, one);
    let other_seed = simulate(&built.model, &law, built.x0, built.i0, &SimConfig { base_seed: 105, ..cfg }).unwrap();
    assert_ne!(many.mean_terminal, other_seed.mean_terminal);
}

#[test]
fn cost_estimators_agree_and_catch_a_wrong_exit_law() {
    let frontier = EfficientFrontier::build(&reference_model(0.5), 1e-4, 1.0, 0).unwrap();
    let law = frontier.law(1.2).unwrap();
    let model = frontier.model();
    let cfg = mc(100_000, 106);
    let honest = simulate(model, &law, 1.0, 0, &cfg).unwrap();
    assert!(dual_cost_check(&honest).pass, "{:?}", dual_cost_check(&honest));
    let skewed = model.horizon().scaled_unchecked(1.1);
    let faulty = simulate_with_exit_law(model, &skewed, &law, 1.0, 0, &cfg).unwrap();
    let report = dual_cost_check(&faulty);
    assert!(!report.pass, "{report:?}");
}

#[test]
fn all_bond_mean_matches_psi() {
    let frontier = EfficientFrontier::build(&reference_model(0.5), 1e-4, 1.0, 0).unwrap();
    let bond = AllBond { n_assets: 1, target: frontier.z_zero() };
    let r = simulate(frontier.model(), &bond, 1.0, 0, &mc(100_000, 107)).unwrap();
    assert!(r.mean_z_score(frontier.z_zero()).abs() <= 3.0);
    assert!(r.mean_at_horizon > r.mean_terminal);
    assert!((r.mean_at_horizon - 0.1f64.exp()).abs() < 1e-4);
}

struct Reckless;

impl Strategy for Reckless {
    fn n_assets(&self) -> usize {
        1
    }

    fn portfolio(&self, _t: f64, x: f64, _regime: usize, out: &mut [f64]) {
        out[0] = 1e4 * x.abs().max(1.0);
    }

    fn target(&self) -> f64 {
        1.0
    }
}

#[test]
fn runaway_wealth_is_reported() {
    let err = simulate(&reference_model(0.0), &Reckless, 1.0, 0, &SimConfig { n_paths: 10, euler_step: 1e-2, ..mc(0, 1) })
        .unwrap_err();
    assert!(matches!(err, SimError::NumericalBlowup { .. }), "{err:?}");
}

#[test]
fn mismatched_strategy_dimension_is_rejected() {
    let built = ModelConfig::from_path(&config_path("two-regime.json")).unwrap().build().unwrap();
    let err = simulate(&built.model, &AllBond { n_assets: 1, target: 1.0 }, 1.0, 0, &mc(10, 1)).unwrap_err();
    assert!(matches!(err, SimError::DimensionMismatch { .. }), "{err:?}");
}
