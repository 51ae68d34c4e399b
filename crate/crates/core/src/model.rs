//! A complete model: regime chain, market and exit-time law on a common
//! horizon.

use thiserror::Error;

use crate::chain::Generator;
use crate::horizon::HorizonSpec;
use crate::market::MarketModel;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ModelError {
    #[error("generator has {generator} regimes but the market has {market}")]
    RegimeCountMismatch { generator: usize, market: usize },
    #[error("market horizon {market} differs from exit-time horizon {horizon}")]
    HorizonMismatch { market: f64, horizon: f64 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct Model {
    generator: Generator,
    market: MarketModel,
    horizon: HorizonSpec,
}

impl Model {
    pub fn new(
        generator: Generator,
        market: MarketModel,
        horizon: HorizonSpec,
    ) -> Result<Self, ModelError> {
        if generator.n_regimes() != market.n_regimes() {
            return Err(ModelError::RegimeCountMismatch {
                generator: generator.n_regimes(),
                market: market.n_regimes(),
            });
        }
        if market.horizon() != horizon.horizon() {
            return Err(ModelError::HorizonMismatch {
                market: market.horizon(),
                horizon: horizon.horizon(),
            });
        }
        Ok(Self { generator, market, horizon })
    }

    pub fn generator(&self) -> &Generator {
        &self.generator
    }

    pub fn market(&self) -> &MarketModel {
        &self.market
    }

    pub fn horizon(&self) -> &HorizonSpec {
        &self.horizon
    }

    /// `T` in years.
    pub fn terminal_time(&self) -> f64 {
        self.market.horizon()
    }

    pub fn n_regimes(&self) -> usize {
        self.generator.n_regimes()
    }

    /// The same market and chain with a different exit-time law.
    pub fn with_horizon(&self, horizon: HorizonSpec) -> Result<Self, ModelError> {
        Self::new(self.generator.clone(), self.market.clone(), horizon)
    }

    /// Interior times where any coefficient or the exit density changes.
    pub fn breakpoints(&self) -> Vec<f64> {
        let mut out = self.market.breakpoints();
        out.extend(self.horizon.breakpoints());
        out.sort_by(f64::total_cmp);
        out.dedup();
        out
    }
}
