//! Mean-variance portfolio selection in a regime-switching market where the
//! investor may leave before the horizon.
//!
//! The crate solves the backward equations that characterize the optimal
//! strategy, evaluates the efficient frontier in closed form, and checks
//! the results against Monte Carlo simulation of the wealth process.
//!
//! ```
//! use regime_frontier::{Generator, HorizonSpec, Model, build_market, SegmentSpec};
//! use regime_frontier::frontier::EfficientFrontier;
//!
//! let market = build_market(
//!     &[vec![SegmentSpec { t_start: 0.0, r: 0.1, mu: vec![0.3], sigma: vec![vec![0.5]] }]],
//!     1.0,
//!     1e-10,
//! )?;
//! let horizon = HorizonSpec::constant(0.5, 1.0, 0.05)?;
//! let model = Model::new(Generator::single_regime(), market, horizon)?;
//! let frontier = EfficientFrontier::build(&model, 1e-3, 1.0, 0)?;
//! let point = frontier.variance_at(1.2)?;
//! assert!(point.variance > frontier.min_variance().variance);
//! # Ok::<(), regime_frontier::Error>(())
//! ```

pub mod bsde;
pub mod chain;
pub mod config;
pub mod frontier;
pub mod horizon;
pub mod market;
pub mod model;
pub mod montecarlo;
mod ode;
pub mod stats;
pub mod streams;

#[cfg(test)]
pub(crate) mod testing;

pub use bsde::{solve, BackwardSolution, BsdeError, DeltaValue, RegimeCurves, TimeGrid};
pub use chain::{ChainError, ChainPath, CountingRecord, Generator};
pub use config::{ConfigError, ModelConfig};
pub use frontier::{EfficientFrontier, FeedbackLaw, FrontierError, FrontierInputs, FrontierPoint};
pub use horizon::{build_horizon, DensitySegment, HorizonError, HorizonSpec};
pub use market::{build_market, MarketError, MarketModel, SegmentSpec, WealthState};
pub use model::{Model, ModelError};
pub use montecarlo::{simulate, SimConfig, SimError, SimResult, Strategy};

/// Any error raised by the library.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error(transparent)]
    Chain(#[from] ChainError),
    #[error(transparent)]
    Market(#[from] MarketError),
    #[error(transparent)]
    Horizon(#[from] HorizonError),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Bsde(#[from] BsdeError),
    #[error(transparent)]
    Frontier(#[from] FrontierError),
    #[error(transparent)]
    Sim(#[from] SimError),
    #[error(transparent)]
    Config(#[from] ConfigError),
}

impl Error {
    /// Name of the innermost error variant, e.g. `"SurvivalMarginViolated"`.
    pub fn code(&self) -> String {
        match self {
            Error::Chain(e) => variant_name(e),
            Error::Market(e) => variant_name(e),
            Error::Horizon(e) => variant_name(e),
            Error::Model(e) => variant_name(e),
            Error::Bsde(e) => bsde_code(e),
            Error::Frontier(e) => frontier_code(e),
            Error::Sim(montecarlo::SimError::Frontier(e)) => frontier_code(e),
            Error::Sim(e) => variant_name(e),
            Error::Config(e) => match e {
                ConfigError::Chain(e) => variant_name(e),
                ConfigError::Market(e) => variant_name(e),
                ConfigError::Horizon(e) => variant_name(e),
                ConfigError::Model(e) => variant_name(e),
                other => variant_name(other),
            },
        }
    }
}

fn bsde_code(e: &BsdeError) -> String {
    match e {
        BsdeError::Chain(e) => variant_name(e),
        other => variant_name(other),
    }
}

fn frontier_code(e: &FrontierError) -> String {
    match e {
        FrontierError::Bsde(e) => bsde_code(e),
        FrontierError::Chain(e) => variant_name(e),
        other => variant_name(other),
    }
}

/// The leading identifier of a derived `Debug` rendering.
fn variant_name<E: std::fmt::Debug>(e: &E) -> String {
    format!("{e:?}").chars().take_while(|c| c.is_alphanumeric() || *c == '_').collect()
}


#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/model.md")]
    mod model {}
    #[doc = include_str!("../../../book/src/backward.md")]
    mod backward {}
    #[doc = include_str!("../../../book/src/frontier.md")]
    mod frontier {}
    #[doc = include_str!("../../../book/src/monte-carlo.md")]
    mod monte_carlo {}
    #[doc = include_str!("../../../book/src/cli.md")]
    mod cli {}
}
