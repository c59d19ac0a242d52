use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum OuterOptimizer {
    Adam,
    Sgd,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainConfig {
    /// Joint / pre-training and meta outer (cross-task) learning rate.
    pub alpha: f64,
    /// Inner-loop and adaptation learning rate.
    pub beta: f64,
    pub batch_size: usize,
    pub inner_steps: usize,
    pub adapt_steps: usize,
    pub max_epochs: usize,
    /// Validation loss must improve by more than this over `plateau_epochs`.
    pub plateau_tol: f64,
    pub plateau_epochs: usize,
    pub validation_fraction: f64,
    /// Window of outer steps for the meta plateau rule.
    pub meta_window: usize,
    pub max_outer_steps: usize,
    pub first_order_meta: bool,
    pub meta_optimizer: OuterOptimizer,
    pub seed: u64,
    pub workers: usize,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            alpha: 0.001,
            beta: 0.01,
            batch_size: 20,
            inner_steps: 20,
            adapt_steps: 20,
            max_epochs: 200,
            plateau_tol: 1e-5,
            plateau_epochs: 10,
            validation_fraction: 0.1,
            meta_window: 50,
            max_outer_steps: usize::MAX,
            first_order_meta: false,
            meta_optimizer: OuterOptimizer::Adam,
            seed: 0,
            workers: 1,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.alpha > 0.0 && self.alpha.is_finite() && self.beta > 0.0 && self.beta.is_finite()) {
            return Err(Error::InvalidConfig("learning rates must be positive and finite".into()));
        }
        if self.batch_size == 0 || self.max_epochs == 0 || self.plateau_epochs == 0 || self.meta_window == 0 {
            return Err(Error::InvalidConfig("batch size, epoch cap and plateau windows must be positive".into()));
        }
        if !(0.0..1.0).contains(&self.validation_fraction) {
            return Err(Error::InvalidConfig("validation fraction must be in [0, 1)".into()));
        }
        Ok(())
    }
}
