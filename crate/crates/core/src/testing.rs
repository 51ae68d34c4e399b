//! Small models shared by unit tests.

use crate::chain::Generator;
use crate::horizon::HorizonSpec;
use crate::market::{build_market, SegmentSpec};
use crate::model::Model;

pub(crate) fn scalar_segment(r: f64, mu: f64, sigma: f64) -> Vec<SegmentSpec> {
    vec![SegmentSpec { t_start: 0.0, r, mu: vec![mu], sigma: vec![vec![sigma]] }]
}

/// One regime, one stock, constant density `f`, `T = 1`.
pub(crate) fn scalar_model(r: f64, mu: f64, sigma: f64, f: f64) -> Model {
    let market = build_market(&[scalar_segment(r, mu, sigma)], 1.0, 1e-10).unwrap();
    let horizon = HorizonSpec::constant(f, 1.0, 0.05).unwrap();
    Model::new(Generator::single_regime(), market, horizon).unwrap()
}

/// Two regimes with `σ = 0.5`, symmetric switching at `rate`, `T = 1`.
pub(crate) fn two_regime_model(r: [f64; 2], mu: [f64; 2], f: f64, rate: f64) -> Model {
    let market = build_market(
        &[scalar_segment(r[0], mu[0], 0.5), scalar_segment(r[1], mu[1], 0.5)],
        1.0,
        1e-10,
    )
    .unwrap();
    let horizon = HorizonSpec::constant(f, 1.0, 0.05).unwrap();
    let generator = Generator::new(&[vec![-rate, rate], vec![rate, -rate]]).unwrap();
    Model::new(generator, market, horizon).unwrap()
}
