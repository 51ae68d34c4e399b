#![allow(dead_code)]

use std::path::PathBuf;

use regime_frontier::{build_market, Generator, HorizonSpec, Model, SegmentSpec, SimConfig};

/// One stock with `r = 0.1`, `μ = 0.3`, `σ = 0.5`, `T = 1` and exit density `f`.
pub fn reference_model(f: f64) -> Model {
    let segment = vec![SegmentSpec { t_start: 0.0, r: 0.1, mu: vec![0.3], sigma: vec![vec![0.5]] }];
    let market = build_market(&[segment], 1.0, 1e-10).unwrap();
    Model::new(Generator::single_regime(), market, HorizonSpec::constant(f, 1.0, 0.05).unwrap()).unwrap()
}

pub fn mc(n_paths: usize, seed: u64) -> SimConfig {
    SimConfig { n_paths, euler_step: 1e-3, base_seed: seed, antithetic: false, record_paths: false }
}

pub fn config_path(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../configs").join(name)
}
